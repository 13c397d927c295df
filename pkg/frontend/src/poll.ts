/**
 * Fixed-interval polling with a stop handle.  The session page refreshes
 * its payload every two seconds; the server stays the source of truth.
 */

export const POLL_INTERVAL_MS = 2000;

export interface PollHandle {
  stop(): void;
}

/**
 * Invoke `tick` immediately and then every `intervalMs` until stopped.
 * Overlapping work is skipped: a tick still in flight suppresses the next.
 */
export function startPolling(tick: () => Promise<void> | void,
                             intervalMs = POLL_INTERVAL_MS): PollHandle {
  let busy = false;
  let stopped = false;
  const fire = async () => {
    if (busy || stopped) return;
    busy = true;
    try {
      await tick();
    } finally {
      busy = false;
    }
  };
  void fire();
  const timer = setInterval(fire, intervalMs);
  return {
    stop() {
      stopped = true;
      clearInterval(timer);
    },
  };
}
