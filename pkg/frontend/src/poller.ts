/**
 * Fixed-cadence progress polling. Fetch errors are reported and polling
 * keeps retrying; polling stops itself once the session reaches a
 * terminal state.
 */

import type { Progress } from "./api.js";

export const POLL_INTERVAL_MS = 1000;

export type ProgressSource = {
  getProgress(sessionId: string): Promise<Progress>;
};

export type PollHandle = {
  stop(): void;
};

export function pollProgress(
  client: ProgressSource,
  sessionId: string,
  onUpdate: (progress: Progress) => void,
  onError: (error: unknown) => void = () => {},
  intervalMs: number = POLL_INTERVAL_MS,
): PollHandle {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | undefined;

  const tick = async (): Promise<void> => {
    try {
      const progress = await client.getProgress(sessionId);
      if (stopped) return;
      onUpdate(progress);
      if (progress.state === "finalized" || progress.state === "aborted") {
        stopped = true;
        return;
      }
    } catch (error) {
      if (stopped) return;
      onError(error);
    }
    timer = setTimeout(() => void tick(), intervalMs);
  };

  void tick();
  return {
    stop() {
      stopped = true;
      if (timer !== undefined) clearTimeout(timer);
    },
  };
}
