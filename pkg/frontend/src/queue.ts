// One post at a time, in enqueue order. The server applies event batches
// atomically and checks seq ordering, so two racing in-flight requests
// would turn ordinary network jitter into rejected batches.

type Job<T> = () => Promise<T>;

export class PostQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private pendingCount = 0;

  /** Resolves with this job's result once every earlier job has settled. */
  push<T>(job: Job<T>): Promise<T> {
    this.pendingCount += 1;
    // tail never rejects: it is always the settled-handler chain below.
    const result = this.tail.then(job);
    this.tail = result.then(
      () => {
        this.pendingCount -= 1;
      },
      () => {
        this.pendingCount -= 1;
      },
    );
    return result;
  }

  get depth(): number {
    return this.pendingCount;
  }

  /** Waits until the queue drains, including jobs enqueued while waiting. */
  async idle(): Promise<void> {
    while (this.pendingCount > 0) {
      await this.tail;
    }
  }
}
