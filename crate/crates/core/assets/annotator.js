// Minimal span/relation annotator for a single paragraph.
// Offsets are counted in Unicode scalar values, matching the backend.
(function () {
  "use strict";

  var data = JSON.parse(document.getElementById("task-data").textContent);
  var config = data.config;
  var text = data.text;
  var container = document.getElementById("paragraph");
  var form = document.getElementById("answer-form");
  var field = form.elements.namedItem("annotations");
  var status = document.getElementById("status");
  var spans = config.pretag ? data.pretags.slice() : [];
  var relations = [];
  var pendingFrom = null;

  var colors = {};
  config.buttons.forEach(function (b) {
    if (colors[b.color]) {
      status.textContent = "config error: duplicate color " + b.color;
    }
    colors[b.color] = true;
  });

  function colorOf(label) {
    for (var i = 0; i < config.buttons.length; i++) {
      if (config.buttons[i].label === label) return config.buttons[i].color;
    }
    return "#ddd";
  }

  function scalarOffset(utf16) {
    return Array.from(text.slice(0, utf16)).length;
  }

  function sliceScalars(start, end) {
    return Array.from(text).slice(start, end).join("");
  }

  // offset of a DOM position inside the container, in UTF-16 units
  function domOffset(node, offset) {
    var range = document.createRange();
    range.selectNodeContents(container);
    range.setEnd(node, offset);
    return range.toString().length;
  }

  function render() {
    var chars = Array.from(text);
    var sorted = spans.slice().sort(function (a, b) { return a.start - b.start; });
    container.textContent = "";
    var at = 0;
    sorted.forEach(function (s) {
      if (s.start > at) container.appendChild(document.createTextNode(chars.slice(at, s.start).join("")));
      var m = document.createElement("mark");
      m.textContent = chars.slice(s.start, s.end).join("");
      m.style.background = colorOf(s.label);
      m.title = s.label;
      m.dataset.index = String(spans.indexOf(s));
      container.appendChild(m);
      at = s.end;
    });
    if (at < chars.length) container.appendChild(document.createTextNode(chars.slice(at).join("")));
    document.getElementById("relations").textContent = relations
      .map(function (r) { return spans[r.from_span].label + " → " + spans[r.to_span].label + " (" + r.kind + ")"; })
      .join("; ");
    field.value = JSON.stringify(payload());
  }

  function payload() {
    return { task_id: data.task_id, spans: spans, relations: relations };
  }

  function addSpan(label) {
    var sel = window.getSelection();
    if (!sel || sel.rangeCount === 0 || sel.isCollapsed) return;
    var r = sel.getRangeAt(0);
    if (!container.contains(r.startContainer) || !container.contains(r.endContainer)) return;
    var start = scalarOffset(domOffset(r.startContainer, r.startOffset));
    var end = scalarOffset(domOffset(r.endContainer, r.endOffset));
    var slice = sliceScalars(start, end);
    var trimmedStart = start + (Array.from(slice).length - Array.from(slice.replace(/^\s+/, "")).length);
    var trimmedEnd = end - (Array.from(slice).length - Array.from(slice.replace(/\s+$/, "")).length);
    if (trimmedEnd <= trimmedStart) return;
    for (var i = 0; i < spans.length; i++) {
      if (trimmedStart < spans[i].end && spans[i].start < trimmedEnd) {
        status.textContent = "selection overlaps an existing span";
        return;
      }
    }
    spans.push({ start: trimmedStart, end: trimmedEnd, label: label, text: sliceScalars(trimmedStart, trimmedEnd) });
    status.textContent = "";
    sel.removeAllRanges();
    render();
  }

  config.buttons.forEach(function (b) {
    var btn = document.createElement("button");
    btn.type = "button";
    btn.textContent = b.label;
    btn.style.background = b.color;
    btn.addEventListener("click", function () { addSpan(b.label); });
    document.getElementById("buttons").appendChild(btn);
  });

  container.addEventListener("click", function (ev) {
    var m = ev.target.closest("mark");
    if (!m || pendingFrom !== null) return;
    if (ev.altKey) {
      var idx = Number(m.dataset.index);
      relations = relations
        .filter(function (r) { return r.from_span !== idx && r.to_span !== idx; })
        .map(function (r) {
          return { from_span: r.from_span > idx ? r.from_span - 1 : r.from_span, to_span: r.to_span > idx ? r.to_span - 1 : r.to_span, kind: r.kind };
        });
      spans.splice(idx, 1);
      render();
    }
  });

  container.addEventListener("contextmenu", function (ev) {
    var m = ev.target.closest("mark");
    if (!m) return;
    ev.preventDefault();
    var idx = Number(m.dataset.index);
    if (pendingFrom === null) {
      pendingFrom = idx;
      status.textContent = "relation from " + spans[idx].label + ": right-click the target span";
      return;
    }
    if (pendingFrom === idx) {
      status.textContent = "a span cannot relate to itself";
      pendingFrom = null;
      return;
    }
    var kind = config.relations.length === 1 ? config.relations[0] : window.prompt("relation kind: " + config.relations.join(", "), config.relations[0] || "");
    if (config.relations.indexOf(kind) < 0) {
      status.textContent = "relation kind not allowed";
    } else {
      relations.push({ from_span: pendingFrom, to_span: idx, kind: kind });
      status.textContent = "";
    }
    pendingFrom = null;
    render();
  });

  // the marketplace passes its submit endpoint as a query parameter
  var params = new URLSearchParams(window.location.search);
  var submitTo = params.get("turkSubmitTo");
  if (submitTo) form.action = submitTo.replace(/\/$/, "") + "/mturk/externalSubmit";
  var assignment = params.get("assignmentId");
  if (assignment) form.elements.namedItem("assignmentId").value = assignment;

  form.addEventListener("submit", function (ev) {
    if (spans.length === 0 && !window.confirm("Submit with nothing tagged?")) {
      ev.preventDefault();
      return;
    }
    field.value = JSON.stringify(payload());
  });

  container.style.maxHeight = config.page_height + "px";
  render();
})();
