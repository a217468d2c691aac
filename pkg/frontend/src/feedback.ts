// Feedback view: one card per rubric section, then the revision story
// with its time references wrapped in <mark> so they stand out.

import type { FeedbackReport } from "./api.js";
import { mmss } from "./clock.js";

// Matches mm:ss stamps and spelled-out minute marks ("the 7-minute mark").
const TIME_REF = /\b\d{1,3}:[0-5]\d\b|\b\d{1,3}(?:\s*-\s*\d{1,3})?[\s-]minute\s+(?:point|mark)\b/gi;

export function renderFeedback(report: FeedbackReport, container: HTMLElement): void {
  container.textContent = "";

  for (const section of report.rubric_feedback) {
    const card = document.createElement("section");
    card.className = "rubric-section";
    const heading = document.createElement("h3");
    heading.textContent = section.display;
    const body = document.createElement("p");
    body.textContent = section.commentary;
    card.append(heading, body);
    container.append(card);
  }

  const narrative = document.createElement("section");
  narrative.className = "revision-narrative";
  const heading = document.createElement("h3");
  heading.textContent = "How your draft evolved";
  const body = document.createElement("p");
  appendWithHighlights(body, report.revision_narrative);
  narrative.append(heading, body);

  if (report.timestamp_anchors.length > 0) {
    const anchors = document.createElement("p");
    anchors.className = "anchor-list";
    anchors.textContent =
      "Moments referenced: " + report.timestamp_anchors.map(mmss).join(", ");
    narrative.append(anchors);
  }
  container.append(narrative);
}

function appendWithHighlights(parent: HTMLElement, text: string): void {
  let last = 0;
  for (const match of text.matchAll(TIME_REF)) {
    const at = match.index ?? 0;
    parent.append(text.slice(last, at));
    const mark = document.createElement("mark");
    mark.textContent = match[0];
    parent.append(mark);
    last = at + match[0].length;
  }
  parent.append(text.slice(last));
}
