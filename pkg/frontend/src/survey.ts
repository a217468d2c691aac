// Survey form: one radio row per agreement item, one textarea per open
// question. Validation is local; an unanswered agreement item blocks the
// post and gets flagged in place.

import type { Instrument } from "./api.js";

const SCALE_LABELS = [
  "strongly disagree",
  "disagree",
  "neutral",
  "agree",
  "strongly agree",
];

export interface SurveyAnswers {
  likert: number[];
  open: string[];
}

export function buildSurveyForm(instrument: Instrument, form: HTMLFormElement): void {
  form.textContent = "";

  for (const item of instrument.likert_items) {
    const fieldset = document.createElement("fieldset");
    fieldset.className = "likert-item";
    fieldset.dataset.itemId = item.item_id;
    const legend = document.createElement("legend");
    legend.textContent = item.text;
    fieldset.append(legend);

    for (let value = 1; value <= 5; value++) {
      const label = document.createElement("label");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = item.item_id;
      radio.value = String(value);
      label.append(radio, ` ${value} (${SCALE_LABELS[value - 1]})`);
      fieldset.append(label);
    }
    form.append(fieldset);
  }

  for (const item of instrument.open_items) {
    const wrapper = document.createElement("div");
    wrapper.className = "open-item";
    const label = document.createElement("label");
    label.textContent = item.text;
    const area = document.createElement("textarea");
    area.name = item.item_id;
    area.rows = 3;
    label.append(area);
    wrapper.append(label);
    form.append(wrapper);
  }
}

export interface SurveyReadResult {
  answers?: SurveyAnswers;
  missing: string[];
}

export function readSurveyForm(instrument: Instrument, form: HTMLFormElement): SurveyReadResult {
  const missing: string[] = [];
  const likert = instrument.likert_items.map((item) => {
    const checked = form.querySelector<HTMLInputElement>(
      `input[name="${item.item_id}"]:checked`,
    );
    if (!checked) {
      missing.push(item.item_id);
      return 0;
    }
    return Number(checked.value);
  });
  const open = instrument.open_items.map((item) => {
    const area = form.querySelector<HTMLTextAreaElement>(`textarea[name="${item.item_id}"]`);
    return area ? area.value : "";
  });
  if (missing.length > 0) return { missing };
  return { answers: { likert, open }, missing };
}

/** Flag unanswered items; clears stale flags from a previous attempt. */
export function markMissing(form: HTMLFormElement, missing: string[]): void {
  for (const fieldset of form.querySelectorAll<HTMLElement>("fieldset.likert-item")) {
    const id = fieldset.dataset.itemId ?? "";
    fieldset.classList.toggle("missing", missing.includes(id));
  }
}
