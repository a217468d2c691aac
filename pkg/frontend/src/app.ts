// View wiring: consent page, timed editor, feedback view, survey, done.
// The host (real page or test) owns the interval and calls tick(); every
// async flow triggered by the UI is tracked so a driver can await
// settled() and observe a quiescent DOM.

import { ApiClient, ApiError, Instrument, SessionCreated } from "./api.js";
import { mmss, MonotonicClock } from "./clock.js";
import { renderFeedback } from "./feedback.js";
import { EditorSession } from "./session.js";
import { buildSurveyForm, markMissing, readSurveyForm } from "./survey.js";

const SHELL = `
  <header class="top-bar">
    <h1>Timed writing session</h1>
    <div id="countdown" class="countdown" hidden></div>
  </header>
  <main>
    <section id="consent-view">
      <h2>Before you start</h2>
      <p class="topic-line">Your topic (<span id="topic-category"></span>):</p>
      <blockquote id="topic-prompt"></blockquote>
      <pre id="guidelines" class="guidelines"></pre>
      <label class="consent-row">
        <input type="checkbox" id="consent-check">
        I have read the guidelines and agree to take part.
      </label>
      <button id="consent-button" disabled>Begin writing</button>
    </section>

    <section id="editor-view" hidden>
      <p id="editor-topic" class="topic-line"></p>
      <textarea id="editor" rows="18" spellcheck="false"
        placeholder="Write your essay here."></textarea>
      <div class="editor-bar">
        <span id="word-count">0 words</span>
        <button id="submit-button">Submit now</button>
      </div>
      <p id="editor-status" class="status"></p>
    </section>

    <section id="feedback-view" hidden>
      <h2>Feedback on your essay</h2>
      <p id="feedback-status" class="status"></p>
      <div id="feedback-body"></div>
      <button id="feedback-retry" hidden>Try again</button>
      <button id="to-survey" hidden>Continue to the survey</button>
    </section>

    <section id="survey-view" hidden>
      <h2>A few questions before you go</h2>
      <form id="survey-form"></form>
      <p id="survey-status" class="status"></p>
      <button id="survey-submit">Send answers</button>
    </section>

    <section id="done-view" hidden>
      <h2>All done</h2>
      <p>Thanks for taking part. You can close this tab now.</p>
    </section>
  </main>
`;

export interface AppOptions {
  /** Injectable wait, so tests never sleep for real. */
  sleep?: (ms: number) => Promise<void>;
  feedbackPollAttempts?: number;
  snapshotEveryMs?: number;
  flushEveryMs?: number;
}

export interface AppHandle {
  start(): Promise<void>;
  tick(): void;
  /** Resolves once every tracked UI flow and queued post has finished. */
  settled(): Promise<void>;
  readonly session: EditorSession | null;
  readonly sessionId: string | null;
}

type Views = "consent-view" | "editor-view" | "feedback-view" | "survey-view" | "done-view";

export function createApp(
  root: HTMLElement,
  api: ApiClient,
  baseClock: MonotonicClock,
  options: AppOptions = {},
): AppHandle {
  root.innerHTML = SHELL;
  const sleep = options.sleep ?? ((ms) => new Promise<void>((r) => setTimeout(r, ms)));
  const pollAttempts = options.feedbackPollAttempts ?? 5;

  const el = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector<T>(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };

  const editor = el<HTMLTextAreaElement>("editor");
  const countdown = el<HTMLDivElement>("countdown");
  const surveyForm = el<HTMLFormElement>("survey-form");

  let created: SessionCreated | null = null;
  let session: EditorSession | null = null;
  let instrument: Instrument | null = null;
  let ops: Promise<void> = Promise.resolve();

  // Chain UI-triggered flows so they run in order and settled() can wait
  // on all of them; a failure is shown, not thrown into the void.
  const track = (flow: () => Promise<void>): Promise<void> => {
    ops = ops.then(flow).catch((error) => {
      console.error(error);
    });
    return ops;
  };

  const showView = (view: Views): void => {
    for (const id of ["consent-view", "editor-view", "feedback-view",
      "survey-view", "done-view"] as const) {
      el(id).hidden = id !== view;
    }
  };

  const wordCount = (): void => {
    const words = editor.value.trim() === "" ? 0 : editor.value.trim().split(/\s+/).length;
    el("word-count").textContent = `${words} word${words === 1 ? "" : "s"}`;
  };

  async function start(): Promise<void> {
    created = await api.createSession();
    el("topic-category").textContent = created.topic.category;
    el("topic-prompt").textContent = created.topic.prompt_text;
    el("guidelines").textContent = created.guidelines_text;
    showView("consent-view");
  }

  async function beginWriting(): Promise<void> {
    if (!created || session) return;
    await api.acknowledgeConsent(created.session_id);
    session = new EditorSession(
      api,
      created.session_id,
      baseClock,
      () => editor.value,
      {
        durationMs: created.duration_ms,
        snapshotEveryMs: options.snapshotEveryMs,
        flushEveryMs: options.flushEveryMs,
      },
      {
        onCountdown: (remaining) => {
          countdown.textContent = mmss(remaining);
        },
        onTimerZero: () => {
          void track(submitFlow);
        },
        onNetworkTrouble: () => {
          el("editor-status").textContent =
            "Connection hiccup; your keystrokes are safe and will be resent.";
        },
      },
    );
    el("editor-topic").textContent = created.topic.prompt_text;
    countdown.hidden = false;
    showView("editor-view");
    editor.focus();
  }

  async function submitFlow(): Promise<void> {
    if (!session || !created) return;
    editor.disabled = true;
    showView("feedback-view");
    el("feedback-retry").hidden = true;
    el("feedback-status").textContent = "Reading your writing process...";
    try {
      await session.submit();
    } catch (error) {
      const detail = error instanceof ApiError ? error.detail : String(error);
      el("feedback-status").textContent =
        `Feedback generation failed (${detail}). Your essay is safe; try again.`;
      el("feedback-retry").hidden = false;
      return;
    }
    const report = await pollFeedback(created.session_id);
    renderFeedback(report, el("feedback-body"));
    el("feedback-status").textContent =
      "Please read the feedback below, then continue to the survey.";
    el("to-survey").hidden = false;
  }

  async function pollFeedback(sessionId: string) {
    for (let attempt = 1; ; attempt++) {
      try {
        return await api.getFeedback(sessionId);
      } catch (error) {
        const retriable = error instanceof ApiError && error.status === 404;
        if (!retriable || attempt >= pollAttempts) throw error;
        await sleep(400);
      }
    }
  }

  async function surveyFlow(): Promise<void> {
    instrument = await api.getInstrument();
    buildSurveyForm(instrument, surveyForm);
    showView("survey-view");
  }

  async function sendSurvey(): Promise<void> {
    if (!instrument || !created) return;
    const read = readSurveyForm(instrument, surveyForm);
    markMissing(surveyForm, read.missing);
    if (!read.answers) {
      el("survey-status").textContent =
        "Please answer every scale question before sending.";
      return;
    }
    try {
      await api.postSurvey(created.session_id, read.answers.likert, read.answers.open);
    } catch (error) {
      const detail = error instanceof ApiError ? error.detail : String(error);
      el("survey-status").textContent = `Could not send your answers: ${detail}`;
      return;
    }
    showView("done-view");
  }

  const consentCheck = el<HTMLInputElement>("consent-check");
  const consentButton = el<HTMLButtonElement>("consent-button");
  consentCheck.addEventListener("change", () => {
    consentButton.disabled = !consentCheck.checked;
  });
  consentButton.addEventListener("click", () => {
    void track(beginWriting);
  });

  editor.addEventListener("keydown", (event) => session?.handleKeydown(event.key));
  editor.addEventListener("keyup", (event) => session?.handleKeyup(event.key));
  editor.addEventListener("cut", () => session?.handleCut());
  editor.addEventListener("input", wordCount);

  el("submit-button").addEventListener("click", () => {
    void track(submitFlow);
  });
  el("feedback-retry").addEventListener("click", () => {
    void track(submitFlow);
  });
  el("to-survey").addEventListener("click", () => {
    void track(surveyFlow);
  });
  el("survey-submit").addEventListener("click", (event) => {
    event.preventDefault();
    void track(sendSurvey);
  });

  return {
    start: () => track(start),
    tick: () => session?.tick(),
    async settled(): Promise<void> {
      // Flows enqueue posts and posts can trigger flows; loop until both
      // the op chain and the session queue are quiet at the same time.
      for (;;) {
        const seen = ops;
        await seen;
        await session?.queue.idle();
        if (ops === seen) return;
      }
    },
    get session() {
      return session;
    },
    get sessionId() {
      return created?.session_id ?? null;
    },
  };
}
