import { beforeEach, describe, expect, it } from "vitest";
import type { Instrument } from "../src/api.js";
import { buildSurveyForm, markMissing, readSurveyForm } from "../src/survey.js";

const INSTRUMENT: Instrument = {
  version: 1,
  likert_items: Array.from({ length: 6 }, (_, i) => ({
    item_id: `lk-0${i + 1}`,
    text: `Statement ${i + 1}.`,
  })),
  open_items: Array.from({ length: 4 }, (_, i) => ({
    item_id: `op-0${i + 1}`,
    text: `Question ${i + 1}?`,
  })),
};

let form: HTMLFormElement;

beforeEach(() => {
  document.body.innerHTML = "";
  form = document.createElement("form");
  document.body.append(form);
  buildSurveyForm(INSTRUMENT, form);
});

function pick(itemId: string, value: number): void {
  form.querySelector<HTMLInputElement>(
    `input[name="${itemId}"][value="${value}"]`,
  )!.click();
}

describe("buildSurveyForm", () => {
  it("renders six scale items with five options each and four open boxes", () => {
    expect(form.querySelectorAll("fieldset.likert-item").length).toBe(6);
    for (const fieldset of form.querySelectorAll("fieldset.likert-item")) {
      expect(fieldset.querySelectorAll('input[type="radio"]').length).toBe(5);
    }
    expect(form.querySelectorAll("textarea").length).toBe(4);
  });

  it("labels the ends of the scale", () => {
    const first = form.querySelector("fieldset.likert-item")!;
    expect(first.textContent).toContain("strongly disagree");
    expect(first.textContent).toContain("strongly agree");
  });
});

describe("readSurveyForm", () => {
  it("reports unanswered scale items and withholds answers", () => {
    pick("lk-01", 5);
    pick("lk-04", 2);
    const read = readSurveyForm(INSTRUMENT, form);
    expect(read.answers).toBeUndefined();
    expect(read.missing).toEqual(["lk-02", "lk-03", "lk-05", "lk-06"]);
  });

  it("collects values once everything is answered; open boxes may stay empty", () => {
    [5, 4, 3, 2, 1, 5].forEach((value, i) => pick(`lk-0${i + 1}`, value));
    form.querySelector<HTMLTextAreaElement>('textarea[name="op-02"]')!.value =
      "It noticed the paragraph I moved.";
    const read = readSurveyForm(INSTRUMENT, form);
    expect(read.missing).toEqual([]);
    expect(read.answers).toEqual({
      likert: [5, 4, 3, 2, 1, 5],
      open: ["", "It noticed the paragraph I moved.", "", ""],
    });
  });
});

describe("markMissing", () => {
  it("flags named items and clears flags on a second pass", () => {
    markMissing(form, ["lk-02", "lk-06"]);
    const flagged = [...form.querySelectorAll("fieldset.missing")].map(
      (f) => (f as HTMLElement).dataset.itemId,
    );
    expect(flagged).toEqual(["lk-02", "lk-06"]);

    markMissing(form, []);
    expect(form.querySelectorAll("fieldset.missing").length).toBe(0);
  });
});
