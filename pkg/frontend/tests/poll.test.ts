import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { POLL_INTERVAL_MS, startPolling } from "../src/poll.js";

describe("polling loop", () => {
  beforeEach(() => { vi.useFakeTimers(); });
  afterEach(() => { vi.useRealTimers(); });

  it("fires immediately and then every two seconds", async () => {
    let ticks = 0;
    const handle = startPolling(() => { ticks += 1; });
    await vi.advanceTimersByTimeAsync(0);
    expect(ticks).toBe(1);
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    expect(ticks).toBe(2);
    await vi.advanceTimersByTimeAsync(3 * POLL_INTERVAL_MS);
    expect(ticks).toBe(5);
    handle.stop();
  });

  it("stops cleanly", async () => {
    let ticks = 0;
    const handle = startPolling(() => { ticks += 1; });
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    handle.stop();
    await vi.advanceTimersByTimeAsync(10 * POLL_INTERVAL_MS);
    expect(ticks).toBe(2);
  });

  it("skips a tick while the previous one is still in flight", async () => {
    let started = 0;
    let release: () => void = () => {};
    const gate = new Promise<void>(resolve => { release = resolve; });
    const handle = startPolling(async () => {
      started += 1;
      await gate;
    });
    await vi.advanceTimersByTimeAsync(0);
    expect(started).toBe(1);
    await vi.advanceTimersByTimeAsync(4 * POLL_INTERVAL_MS);
    expect(started).toBe(1);
    release();
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    expect(started).toBe(2);
    handle.stop();
  });
});
