import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { Progress } from "../src/api.js";
import { pollProgress } from "../src/poller.js";

function progressAt(count: number, state: Progress["state"] = "collecting"): Progress {
  return { state, sample_count: count, elapsed_ms: count * 1000, latest: null };
}

describe("progress poller", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("fetches immediately and then once per second", async () => {
    const getProgress = vi
      .fn<(id: string) => Promise<Progress>>()
      .mockImplementation(async () => progressAt(getProgress.mock.calls.length));
    const updates: number[] = [];
    const handle = pollProgress(
      { getProgress },
      "s1",
      (p) => updates.push(p.sample_count),
    );

    await vi.advanceTimersByTimeAsync(0);
    expect(getProgress).toHaveBeenCalledTimes(1);
    await vi.advanceTimersByTimeAsync(1000);
    expect(getProgress).toHaveBeenCalledTimes(2);
    await vi.advanceTimersByTimeAsync(2000);
    expect(getProgress).toHaveBeenCalledTimes(4);
    expect(updates).toEqual([1, 2, 3, 4]);
    handle.stop();
  });

  it("reports errors and keeps retrying", async () => {
    let calls = 0;
    const getProgress = async (): Promise<Progress> => {
      calls += 1;
      if (calls <= 2) throw new Error("connection refused");
      return progressAt(calls);
    };
    const updates: number[] = [];
    const errors: string[] = [];
    const handle = pollProgress(
      { getProgress },
      "s1",
      (p) => updates.push(p.sample_count),
      (e) => errors.push((e as Error).message),
    );

    await vi.advanceTimersByTimeAsync(3000);
    expect(errors).toEqual(["connection refused", "connection refused"]);
    expect(updates.length).toBeGreaterThan(0);
    handle.stop();
  });

  it("stops itself once the session is finalized", async () => {
    let calls = 0;
    const getProgress = async (): Promise<Progress> => {
      calls += 1;
      return progressAt(calls, calls >= 2 ? "finalized" : "collecting");
    };
    pollProgress({ getProgress }, "s1", () => {});

    await vi.advanceTimersByTimeAsync(5000);
    expect(calls).toBe(2);
  });

  it("stop() halts future fetches", async () => {
    let calls = 0;
    const getProgress = async (): Promise<Progress> => {
      calls += 1;
      return progressAt(calls);
    };
    const handle = pollProgress({ getProgress }, "s1", () => {});
    await vi.advanceTimersByTimeAsync(1500);
    handle.stop();
    const seen = calls;
    await vi.advanceTimersByTimeAsync(5000);
    expect(calls).toBe(seen);
  });
});
