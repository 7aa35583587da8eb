/** Polling loop with a single in-flight request and stale-data tracking.
 *
 * On a failed poll the previous snapshot is retained and `stale` flips on;
 * the next successful poll replaces the snapshot and clears it.
 */

export interface PollView<T> {
  snapshot: T | null;
  stale: boolean;
  lastError: string | null;
}

export class Poller<T> {
  private view: PollView<T> = { snapshot: null, stale: false, lastError: null };
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly fetchSnapshot: () => Promise<T>,
    private readonly onChange: (view: PollView<T>) => void,
    readonly intervalMs: number = 2000,
  ) {}

  current(): PollView<T> {
    return this.view;
  }

  async pollOnce(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const snapshot = await this.fetchSnapshot();
      this.view = { snapshot, stale: false, lastError: null };
    } catch (err) {
      this.view = { ...this.view, stale: true, lastError: String(err) };
    } finally {
      this.inFlight = false;
    }
    this.onChange(this.view);
  }

  start(): void {
    if (this.timer !== null) return;
    void this.pollOnce();
    this.timer = setInterval(() => void this.pollOnce(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
