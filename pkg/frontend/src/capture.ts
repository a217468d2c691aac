// Key capture for the editor. Events are buffered with a strictly
// increasing seq and a session-clock t_ms; a backspace keydown carries the
// full editor text as it stood before the deletion (keydown fires before
// the browser applies the edit, so reading the textarea there is exact).

export type KeyKind = "keydown" | "keyup";
export type KeyName = "backspace" | "character" | "enter" | "other";

export interface KeyEvent {
  seq: number;
  kind: KeyKind;
  key: KeyName;
  t_ms: number;
  content?: string;
}

export function classifyKey(domKey: string): KeyName {
  if (domKey === "Backspace") return "backspace";
  if (domKey === "Enter") return "enter";
  // Printable keys report their glyph as a single code point.
  if ([...domKey].length === 1) return "character";
  return "other";
}

export interface CaptureOptions {
  bufferLimit?: number;
  onOverflow?: () => void;
}

export class KeyCapture {
  private nextSeq = 1;
  private buffer: KeyEvent[] = [];
  private readonly bufferLimit: number;
  private readonly onOverflow?: () => void;

  constructor(
    private readonly clock: { now(): number },
    private readonly getText: () => string,
    options: CaptureOptions = {},
  ) {
    this.bufferLimit = options.bufferLimit ?? 64;
    this.onOverflow = options.onOverflow;
  }

  keydown(domKey: string): KeyEvent {
    const key = classifyKey(domKey);
    const event: KeyEvent = {
      seq: this.nextSeq++,
      kind: "keydown",
      key,
      t_ms: this.clock.now(),
    };
    if (key === "backspace") event.content = this.getText();
    return this.push(event);
  }

  keyup(domKey: string): KeyEvent {
    return this.push({
      seq: this.nextSeq++,
      kind: "keyup",
      key: classifyKey(domKey),
      t_ms: this.clock.now(),
    });
  }

  // Cut and forward-delete remove text without a Backspace keydown. They
  // are logged as a synthetic backspace pair so the pre-edit text is still
  // captured; the wire format only lets backspace keydowns carry content.
  syntheticDeletion(preEditText: string): void {
    const t = this.clock.now();
    this.push({
      seq: this.nextSeq++,
      kind: "keydown",
      key: "backspace",
      t_ms: t,
      content: preEditText,
    });
    this.push({ seq: this.nextSeq++, kind: "keyup", key: "backspace", t_ms: t });
  }

  private push(event: KeyEvent): KeyEvent {
    this.buffer.push(event);
    if (this.buffer.length >= this.bufferLimit) this.onOverflow?.();
    return event;
  }

  /** Hand over everything buffered, oldest first. */
  drain(): KeyEvent[] {
    const drained = this.buffer;
    this.buffer = [];
    return drained;
  }

  /** A failed batch goes back to the front so ordering survives a retry.
   * The server skips already-applied seqs, so re-sending is safe. */
  restore(events: KeyEvent[]): void {
    this.buffer = [...events, ...this.buffer];
  }

  get pending(): number {
    return this.buffer.length;
  }

  get lastSeq(): number {
    return this.nextSeq - 1;
  }
}
