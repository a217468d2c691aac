// Live-session controller. Owns the session clock, the key buffer, and
// the single ordered post queue; everything that reaches the network for a
// session goes through that queue, which is what guarantees the server
// sees events before the snapshot or submit that follows them.

import { ApiClient, ApiError, SubmitResult } from "./api.js";
import { KeyCapture } from "./capture.js";
import { MonotonicClock, SessionClock } from "./clock.js";
import { PostQueue } from "./queue.js";

export interface SessionCallbacks {
  onCountdown?(remainingMs: number): void;
  /** Fires exactly once when the countdown reaches zero. */
  onTimerZero?(): void;
  onNetworkTrouble?(context: string, error: unknown): void;
}

export interface EditorSessionOptions {
  durationMs: number;
  snapshotEveryMs?: number;
  flushEveryMs?: number;
  bufferLimit?: number;
}

export class EditorSession {
  readonly clock: SessionClock;
  readonly capture: KeyCapture;
  readonly queue = new PostQueue();

  private readonly durationMs: number;
  private readonly snapshotEveryMs: number;
  private readonly snapshotLimit: number;
  private readonly flushEveryMs: number;

  private nextSnapshotIndex = 1;
  private snapshotInFlight = false;
  private lastFlushAt = 0;
  private timerFired = false;
  private submitRequested = false;
  private submitPromise: Promise<SubmitResult> | null = null;

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    baseClock: MonotonicClock,
    private readonly getText: () => string,
    options: EditorSessionOptions,
    private readonly callbacks: SessionCallbacks = {},
  ) {
    this.durationMs = options.durationMs;
    this.snapshotEveryMs = options.snapshotEveryMs ?? 180_000;
    this.snapshotLimit = Math.floor(this.durationMs / this.snapshotEveryMs);
    this.flushEveryMs = options.flushEveryMs ?? 2_000;
    this.clock = new SessionClock(baseClock);
    this.capture = new KeyCapture(this.clock, getText, {
      bufferLimit: options.bufferLimit ?? 64,
      onOverflow: () => this.flush(),
    });
  }

  get elapsedMs(): number {
    return this.clock.now();
  }

  get remainingMs(): number {
    return Math.max(0, this.durationMs - this.clock.now());
  }

  get submitted(): boolean {
    return this.submitRequested;
  }

  /** Input stops counting once the essay is on its way to the server. */
  get acceptingInput(): boolean {
    return !this.submitRequested;
  }

  handleKeydown(domKey: string): void {
    if (!this.acceptingInput) return;
    if (domKey === "Delete") {
      // Forward-delete removes text with no backspace keydown of its own.
      this.capture.syntheticDeletion(this.getText());
      return;
    }
    this.capture.keydown(domKey);
  }

  handleKeyup(domKey: string): void {
    if (!this.acceptingInput) return;
    if (domKey === "Delete") return; // its synthetic pair already closed
    this.capture.keyup(domKey);
  }

  handleCut(): void {
    if (!this.acceptingInput) return;
    this.capture.syntheticDeletion(this.getText());
  }

  /** Periodic driver: countdown, batching cadence, snapshots, timer zero.
   * Safe to call as often as the host likes. */
  tick(): void {
    const t = this.clock.now();
    this.callbacks.onCountdown?.(this.remainingMs);

    if (!this.submitRequested) {
      while (
        this.nextSnapshotIndex <= this.snapshotLimit &&
        !this.snapshotInFlight &&
        this.nextSnapshotIndex * this.snapshotEveryMs <= t
      ) {
        this.scheduleSnapshot(this.nextSnapshotIndex);
      }
      if (this.capture.pending > 0 && t - this.lastFlushAt >= this.flushEveryMs) {
        this.flush();
      }
    }

    if (t >= this.durationMs && !this.timerFired) {
      this.timerFired = true;
      if (!this.submitRequested) this.callbacks.onTimerZero?.();
    }
  }

  /** Queue a drain-and-post of whatever is buffered. The drain happens
   * when the job runs, so events keep arriving in batch order even while
   * a previous post is still in flight. */
  flush(): Promise<void> {
    this.lastFlushAt = this.clock.now();
    return this.queue.push(async () => {
      const events = this.capture.drain();
      if (events.length === 0) return;
      try {
        await this.api.postEvents(this.sessionId, events);
      } catch (error) {
        this.capture.restore(events);
        this.callbacks.onNetworkTrouble?.("events", error);
      }
    });
  }

  private scheduleSnapshot(index: number): void {
    this.snapshotInFlight = true;
    this.flush(); // the server must see pending events before the snapshot
    this.queue.push(async () => {
      try {
        await this.postSnapshotOnce(index);
        this.nextSnapshotIndex = index + 1;
      } catch (error) {
        if (error instanceof ApiError && error.status === 422) {
          // Out of its window; the moment has passed and a later retry
          // can only be further out, so give up on this index.
          this.nextSnapshotIndex = index + 1;
        } else if (error instanceof ApiError && error.status === 409) {
          // Already recorded (say, after a page reload mid-session).
          this.nextSnapshotIndex = index + 1;
        } else {
          // Network trouble: leave the index; the next tick re-queues it.
          this.callbacks.onNetworkTrouble?.("snapshot", error);
        }
      } finally {
        this.snapshotInFlight = false;
      }
    });
  }

  private async postSnapshotOnce(index: number): Promise<void> {
    const attempt = () =>
      this.api.postSnapshot(this.sessionId, index, this.clock.now(), this.getText());
    try {
      await attempt();
    } catch (error) {
      if (error instanceof ApiError && error.status !== 502) throw error;
      await attempt(); // one immediate retry on transport/provider trouble
    }
  }

  /** Post the final text. Idempotent while in flight or after success:
   * the countdown and the submit button may both land here, but only one
   * request leaves. A failed attempt clears the latch so the user can
   * retry. */
  submit(finalText?: string): Promise<SubmitResult> {
    if (this.submitPromise) return this.submitPromise;
    this.submitRequested = true;
    const text = finalText ?? this.getText();
    this.flush();
    this.submitPromise = this.queue.push(() =>
      this.api.submit(this.sessionId, text, this.clock.now()),
    );
    this.submitPromise.catch(() => {
      this.submitPromise = null;
      this.submitRequested = false;
    });
    return this.submitPromise;
  }
}
