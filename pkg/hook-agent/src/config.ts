import { readFileSync } from 'node:fs';
import { DATA_CATEGORIES, type CaptureMode, type HookConfig, type HookEntry } from './types.js';

const CATEGORY_SET = new Set<string>(DATA_CATEGORIES);
const ARGUMENT_RE = /^argument:(\d+)$/;

export class ConfigError extends Error {}

function validCapture(capture: string): capture is CaptureMode {
  return capture === 'return_value' || ARGUMENT_RE.test(capture);
}

/** Parse a HookConfig object, enforcing the invariants every entry must hold. */
export function validateConfig(raw: unknown): HookConfig {
  if (typeof raw !== 'object' || raw === null || !Array.isArray((raw as any).entries)) {
    throw new ConfigError('hook config must be an object with an "entries" array');
  }
  const entries: HookEntry[] = [];
  const seen = new Set<string>();
  for (const [i, item] of (raw as any).entries.entries()) {
    const sig = item?.api_signature;
    if (typeof sig !== 'string' || !sig.includes('#')) {
      throw new ConfigError(`entry ${i}: api_signature must look like "Class#method"`);
    }
    if (seen.has(sig)) {
      throw new ConfigError(`entry ${i}: duplicate signature ${sig}`);
    }
    seen.add(sig);
    if (!CATEGORY_SET.has(item?.category)) {
      throw new ConfigError(`entry ${i}: unknown category ${item?.category}`);
    }
    if (typeof item?.capture !== 'string' || !validCapture(item.capture)) {
      throw new ConfigError(`entry ${i}: capture must be "return_value" or "argument:N"`);
    }
    entries.push({ api_signature: sig, category: item.category, capture: item.capture });
  }
  return { version: (raw as any).version, entries };
}

export function loadConfig(path: string): HookConfig {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, 'utf-8'));
  } catch (err) {
    throw new ConfigError(`cannot read hook config ${path}: ${err}`);
  }
  return validateConfig(parsed);
}

export function argumentIndex(capture: CaptureMode): number | null {
  const match = ARGUMENT_RE.exec(capture);
  return match ? Number(match[1]) : null;
}
