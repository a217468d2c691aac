// Session time is measured on the monotonic performance timer, never on
// Date.now(): wall clocks jump around (NTP slews, suspend/resume), and the
// server's burst arithmetic needs t_ms values that never run backwards.

export interface MonotonicClock {
  now(): number;
}

export const performanceClock: MonotonicClock = {
  now: () => performance.now(),
};

/** The base clock rebased to a session origin, in whole milliseconds. */
export class SessionClock {
  private readonly t0: number;
  private last = 0;

  constructor(private readonly base: MonotonicClock) {
    this.t0 = base.now();
  }

  now(): number {
    // Rounding can tie two nearby reads; clamp so the value never decreases.
    const t = Math.round(this.base.now() - this.t0);
    if (t > this.last) this.last = t;
    return this.last;
  }
}

export function mmss(ms: number): string {
  const total = Math.max(0, Math.floor(ms / 1000));
  const m = Math.floor(total / 60);
  const s = total % 60;
  return `${String(m).padStart(2, "0")}:${String(s).padStart(2, "0")}`;
}
