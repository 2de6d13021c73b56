import { closeSync, fsyncSync, openSync, writeSync } from 'node:fs';
import { csvRow } from './csv.js';
import { CAPTURE_FIELDS, CAPTURE_HEADER, type AgentMessage } from './types.js';

/**
 * Host-side sink for agent messages. Writes the capture CSV consumed by
 * the audit toolkit: fixed header, RFC-4180 quoting, one flush per
 * message so a crash never loses more than the in-flight row.
 *
 * Timestamps are assigned here, not in the agent, so all rows share one
 * clock. The clock is injectable for deterministic tests.
 */
export class Collector {
  private fd: number | null = null;
  private headerWritten = false;
  rows = 0;

  constructor(
    private readonly outPath: string,
    private readonly clock: () => Date = () => new Date(),
  ) {}

  open(): void {
    this.fd = openSync(this.outPath, 'w');
    writeSync(this.fd, CAPTURE_HEADER + '\r\n');
    fsyncSync(this.fd);
    this.headerWritten = true;
  }

  /** Stamp one message and append it; returns the row as written. */
  write(message: AgentMessage): Record<string, string> {
    if (this.fd === null || !this.headerWritten) {
      throw new Error('collector is not open');
    }
    const stamped: Record<string, string> = {
      timestamp: message.timestamp ?? this.clock().toISOString(),
      api_name: message.api_name,
      category: message.category,
      operation: message.operation,
      return_value: message.return_value,
      call_stack: message.call_stack,
    };
    writeSync(this.fd, csvRow(CAPTURE_FIELDS.map((f) => stamped[f])));
    fsyncSync(this.fd);
    this.rows += 1;
    return stamped;
  }

  close(): void {
    if (this.fd !== null) {
      closeSync(this.fd);
      this.fd = null;
    }
  }
}

/** Convenience: drain a whole message stream into a capture CSV. */
export function collectToCsv(
  messages: Iterable<AgentMessage>,
  outPath: string,
  clock?: () => Date,
): Record<string, string>[] {
  const collector = new Collector(outPath, clock);
  collector.open();
  const written: Record<string, string>[] = [];
  try {
    for (const message of messages) {
      written.push(collector.write(message));
    }
  } finally {
    collector.close();
  }
  return written;
}
