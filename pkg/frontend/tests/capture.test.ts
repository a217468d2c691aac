import { describe, expect, it } from "vitest";
import { classifyKey, KeyCapture } from "../src/capture.js";
import { FakeClock } from "./fakes.js";

function makeCapture(text = () => "hello", limit = 64, onOverflow?: () => void) {
  const clock = new FakeClock();
  const capture = new KeyCapture(clock, text, { bufferLimit: limit, onOverflow });
  return { clock, capture };
}

describe("classifyKey", () => {
  it("maps DOM key names onto the wire vocabulary", () => {
    expect(classifyKey("Backspace")).toBe("backspace");
    expect(classifyKey("Enter")).toBe("enter");
    expect(classifyKey("a")).toBe("character");
    expect(classifyKey("Q")).toBe("character");
    expect(classifyKey(" ")).toBe("character");
    expect(classifyKey("é")).toBe("character");
    expect(classifyKey("Shift")).toBe("other");
    expect(classifyKey("ArrowLeft")).toBe("other");
  });

  it("treats an astral-plane glyph as one character", () => {
    expect(classifyKey("\u{1F600}")).toBe("character");
  });
});

describe("KeyCapture", () => {
  it("assigns strictly increasing seq starting at 1", () => {
    const { capture } = makeCapture();
    capture.keydown("a");
    capture.keyup("a");
    capture.keydown("Backspace");
    const seqs = capture.drain().map((e) => e.seq);
    expect(seqs).toEqual([1, 2, 3]);
    expect(capture.lastSeq).toBe(3);
  });

  it("attaches the current text only to backspace keydowns", () => {
    let text = "draft so far";
    const { capture } = makeCapture(() => text);
    capture.keydown("x");
    capture.keydown("Backspace");
    text = "draft so fa";
    capture.keyup("Backspace");
    const [char, down, up] = capture.drain();
    expect(char.content).toBeUndefined();
    expect(down.content).toBe("draft so far");
    expect(up.content).toBeUndefined();
  });

  it("emits a synthetic backspace pair for cut and forward-delete", () => {
    const { clock, capture } = makeCapture();
    clock.advance(500);
    capture.syntheticDeletion("about to vanish");
    const [down, up] = capture.drain();
    expect(down).toMatchObject({
      kind: "keydown",
      key: "backspace",
      t_ms: 500,
      content: "about to vanish",
    });
    expect(up).toMatchObject({ kind: "keyup", key: "backspace", t_ms: 500 });
    expect(up.seq).toBe(down.seq + 1);
  });

  it("drain empties the buffer; restore puts a failed batch back in front", () => {
    const { capture } = makeCapture();
    capture.keydown("a");
    capture.keyup("a");
    const batch = capture.drain();
    expect(capture.pending).toBe(0);
    capture.keydown("b");
    capture.restore(batch);
    const seqs = capture.drain().map((e) => e.seq);
    expect(seqs).toEqual([1, 2, 3]);
  });

  it("hitting the buffer limit calls the overflow hook", () => {
    let overflowed = 0;
    const { capture } = makeCapture(() => "", 4, () => {
      overflowed += 1;
    });
    capture.keydown("a");
    capture.keyup("a");
    capture.keydown("b");
    expect(overflowed).toBe(0);
    capture.keyup("b");
    expect(overflowed).toBe(1);
  });

  it("uses the clock for t_ms", () => {
    const { clock, capture } = makeCapture();
    capture.keydown("a");
    clock.advance(130);
    capture.keyup("a");
    const [down, up] = capture.drain();
    expect(down.t_ms).toBe(0);
    expect(up.t_ms).toBe(130);
  });
});
