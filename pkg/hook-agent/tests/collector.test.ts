import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterEach, beforeEach, describe, expect, it } from 'vitest';
import { Collector, collectToCsv } from '../src/collector.js';
import { CAPTURE_HEADER, type AgentMessage } from '../src/types.js';

function message(overrides: Partial<AgentMessage> = {}): AgentMessage {
  return {
    api_name: 'android.net.wifi.WifiInfo#getSSID',
    category: 'SSID',
    operation: 'call',
    return_value: 'MyNet',
    call_stack: '',
    ...overrides,
  };
}

function fixedClock(): () => Date {
  let tick = 0;
  return () => new Date(Date.UTC(2024, 2, 2, 8, 0, tick++));
}

describe('Collector', () => {
  let dir: string;
  let out: string;

  beforeEach(() => {
    dir = mkdtempSync(join(tmpdir(), 'collector-'));
    out = join(dir, 'capture.csv');
  });

  afterEach(() => {
    rmSync(dir, { recursive: true, force: true });
  });

  it('writes the exact header once plus one line per message', () => {
    collectToCsv([message(), message(), message()], out, fixedClock());
    const lines = readFileSync(out, 'utf-8').split('\r\n').filter((l) => l.length > 0);
    expect(lines).toHaveLength(4);
    expect(lines[0]).toBe(CAPTURE_HEADER);
    expect(lines[0]).toBe('timestamp,api_name,category,operation,return_value,call_stack');
  });

  it('produces a header-only file for an empty stream', () => {
    collectToCsv([], out);
    expect(readFileSync(out, 'utf-8')).toBe(CAPTURE_HEADER + '\r\n');
  });

  it('quotes fields carrying commas per RFC 4180', () => {
    collectToCsv([message({ category: 'Location', return_value: '48.1371,11.5754' })], out,
      fixedClock());
    const data = readFileSync(out, 'utf-8');
    expect(data).toContain('"48.1371,11.5754"');
  });

  it('doubles embedded quotes', () => {
    collectToCsv([message({ return_value: '"HomeNet"' })], out, fixedClock());
    expect(readFileSync(out, 'utf-8')).toContain('"""HomeNet"""');
  });

  it('stamps messages with the collector clock', () => {
    const written = collectToCsv([message(), message()], out, fixedClock());
    expect(written[0].timestamp).toBe('2024-03-02T08:00:00.000Z');
    expect(written[1].timestamp).toBe('2024-03-02T08:00:01.000Z');
  });

  it('counts rows and refuses writes before open', () => {
    const collector = new Collector(out);
    expect(() => collector.write(message())).toThrow(/not open/);
    collector.open();
    collector.write(message());
    collector.close();
    expect(collector.rows).toBe(1);
  });
});
