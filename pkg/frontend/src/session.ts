/** Client-side session identity and the fire-and-forget event queue. */

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const STORAGE_KEY = "browselab.session";
const ID_PATTERN = /^[0-9a-f]{32}$/;

/** Random 128-bit session id as 32 hex chars. */
export function newSessionId(randomBytes?: (n: number) => Uint8Array): string {
  const fill = randomBytes ?? ((n: number) => crypto.getRandomValues(new Uint8Array(n)));
  return Array.from(fill(16), (b) => b.toString(16).padStart(2, "0")).join("");
}

/** One session id per browsing session, persisted in the given storage. */
export function getOrCreateSessionId(storage: KeyValueStorage): string {
  const existing = storage.getItem(STORAGE_KEY);
  if (existing && ID_PATTERN.test(existing)) {
    return existing;
  }
  const id = newSessionId();
  storage.setItem(STORAGE_KEY, id);
  return id;
}

export interface EventQueueOptions {
  /** Additional delivery attempts after the first failure. */
  retries?: number;
  /** Clock used for client-side event timestamps (ms since epoch). */
  now?: () => number;
}

interface QueuedEvent {
  session_id: string;
  event_type: string;
  payload: Record<string, unknown>;
  timestamp: number;
  event_id?: string;
}

/**
 * Orders event posts and retries failures without ever blocking the UI.
 *
 * Events carry client timestamps taken at enqueue time, so ordering is
 * preserved even when deliveries are retried.
 */
export class EventQueue {
  private tail: Promise<void> = Promise.resolve();
  private readonly post: (body: QueuedEvent) => Promise<void>;
  private readonly retries: number;
  private readonly now: () => number;
  sent = 0;
  dropped = 0;

  constructor(post: (body: QueuedEvent) => Promise<void>, options: EventQueueOptions = {}) {
    this.post = post;
    this.retries = options.retries ?? 2;
    this.now = options.now ?? Date.now;
  }

  enqueue(
    sessionId: string,
    eventType: string,
    payload: Record<string, unknown>,
    eventId?: string,
  ): Promise<void> {
    const body: QueuedEvent = {
      session_id: sessionId,
      event_type: eventType,
      payload,
      timestamp: this.now(),
      ...(eventId !== undefined ? { event_id: eventId } : {}),
    };
    this.tail = this.tail.then(() => this.deliver(body));
    return this.tail;
  }

  /** Resolves once everything enqueued so far has been attempted. */
  flush(): Promise<void> {
    return this.tail;
  }

  private async deliver(body: QueuedEvent): Promise<void> {
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      try {
        await this.post(body);
        this.sent += 1;
        return;
      } catch {
        // best effort: retry, then drop
      }
    }
    this.dropped += 1;
  }
}
