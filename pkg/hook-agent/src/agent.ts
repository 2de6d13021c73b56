import { argumentIndex } from './config.js';
import type { AgentMessage, HookConfig, HookEntry } from './types.js';

export class AgentError extends Error {}

/**
 * Resolves a class name to a hookable object. In a real injection runtime
 * this wraps the platform's class lookup; the desk-scale stub harness
 * passes plain objects standing in for platform classes.
 */
export interface TargetRegistry {
  resolve(className: string): Record<string, unknown> | undefined;
}

export class MapRegistry implements TargetRegistry {
  constructor(private readonly classes: Map<string, Record<string, unknown>>) {}

  resolve(className: string): Record<string, unknown> | undefined {
    return this.classes.get(className);
  }
}

export interface InstallReport {
  installed: number;
  unresolved: string[];
}

/** Renders a captured value as the single text field carried in a message. */
export function renderValue(value: unknown): string {
  try {
    if (value === null || value === undefined) return '';
    if (typeof value === 'string') return value;
    if (typeof value === 'number' || typeof value === 'boolean' || typeof value === 'bigint') {
      return String(value);
    }
    if (Array.isArray(value)) return value.map(renderValue).join(',');
    const text = JSON.stringify(value);
    return text === undefined ? '<unrenderable>' : text;
  } catch {
    return '<unrenderable>';
  }
}

interface InstalledHook {
  target: Record<string, unknown>;
  method: string;
  original: (...args: unknown[]) => unknown;
}

/**
 * Wraps configured methods so every call is observed and forwarded as an
 * AgentMessage, while the caller sees the original behavior unchanged.
 */
export class HookAgent {
  private readonly installedBySignature = new Map<string, InstalledHook>();

  constructor(
    private readonly registry: TargetRegistry,
    private readonly emit: (message: AgentMessage) => void,
    private readonly captureStacks = false,
  ) {}

  installHooks(config: HookConfig): InstallReport {
    if (config.entries.length === 0) {
      throw new AgentError('hook config has no entries');
    }
    const unresolved: string[] = [];
    let installed = 0;
    for (const entry of config.entries) {
      if (this.installedBySignature.has(entry.api_signature)) {
        continue; // idempotent per signature
      }
      if (this.installOne(entry)) {
        installed += 1;
      } else {
        unresolved.push(entry.api_signature);
      }
    }
    if (this.installedBySignature.size === 0) {
      throw new AgentError(
        `no hookable signatures among ${config.entries.length} entries: ${unresolved.join(', ')}`,
      );
    }
    return { installed, unresolved };
  }

  private installOne(entry: HookEntry): boolean {
    const hashAt = entry.api_signature.lastIndexOf('#');
    const className = entry.api_signature.slice(0, hashAt);
    const methodName = entry.api_signature.slice(hashAt + 1);
    const target = this.registry.resolve(className);
    const original = target?.[methodName];
    if (!target || typeof original !== 'function') {
      return false;
    }

    const agent = this;
    const argIndex = argumentIndex(entry.capture);
    function wrapper(this: unknown, ...args: unknown[]) {
      let result: unknown;
      try {
        result = (original as (...a: unknown[]) => unknown).apply(this, args);
      } catch (err) {
        agent.emitMessage(entry, 'threw', argIndex === null ? undefined : args[argIndex]);
        throw err; // pass-through: the caller sees the original failure
      }
      agent.emitMessage(entry, 'call', argIndex === null ? result : args[argIndex]);
      return result;
    }

    target[entry.api_signature.slice(hashAt + 1)] = wrapper;
    this.installedBySignature.set(entry.api_signature, {
      target,
      method: methodName,
      original: original as (...a: unknown[]) => unknown,
    });
    return true;
  }

  private emitMessage(entry: HookEntry, operation: string, value: unknown) {
    this.emit({
      api_name: entry.api_signature,
      category: entry.category,
      operation,
      return_value: renderValue(value),
      call_stack: this.captureStacks ? new Error().stack ?? '' : '',
    });
  }

  /** Restores every wrapped method; mainly for harness hygiene. */
  uninstallAll(): void {
    for (const { target, method, original } of this.installedBySignature.values()) {
      target[method] = original;
    }
    this.installedBySignature.clear();
  }
}
