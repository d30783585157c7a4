// Frame scrubbing state: single-frame precision, clamped at clip bounds.

export class Scrubber {
  private index = 0;

  constructor(readonly frameCount: number) {
    if (frameCount < 1) throw new Error("clip has no frames");
  }

  get current(): number {
    return this.index;
  }

  /** Jump to an absolute frame; out-of-range requests are clamped. */
  seek(frame: number): number {
    this.index = Math.min(Math.max(Math.trunc(frame), 0), this.frameCount - 1);
    return this.index;
  }

  /** Step by a signed delta (keyboard: +-1, +-10); clamps at both ends. */
  step(delta: number): number {
    return this.seek(this.index + delta);
  }
}

// Keyboard layout for the workbench; annotating the exact kick frame needs
// single-frame stepping, so the arrows stay unmodified.
export const KEY_BINDINGS: Record<string, number> = {
  ArrowRight: 1,
  ArrowLeft: -1,
  ArrowUp: 10,
  ArrowDown: -10,
};
