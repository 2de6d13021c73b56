/** Shared wire types between the in-process agent and the host collector. */

export const DATA_CATEGORIES = [
  'IPAddress',
  'NetType',
  'SSID',
  'AndroidID',
  'OAID',
  'AAID',
  'VAID',
  'MccMnc',
  'SimCountryCode',
  'Location',
] as const;

export type DataCategory = (typeof DATA_CATEGORIES)[number];

/** What to capture from a hooked call: its return value or one argument. */
export type CaptureMode = 'return_value' | `argument:${number}`;

export interface HookEntry {
  /** "fully.qualified.Class#method" */
  api_signature: string;
  category: DataCategory;
  capture: CaptureMode;
}

export interface HookConfig {
  version?: string;
  entries: HookEntry[];
}

/**
 * One observed invocation. Timestamps are assigned by the collector (one
 * clock on the host side), so the agent leaves `timestamp` empty.
 */
export interface AgentMessage {
  timestamp?: string;
  api_name: string;
  category: DataCategory;
  operation: string;
  return_value: string;
  call_stack: string;
}

/** Field order is the CSV contract with the ingesting toolkit. */
export const CAPTURE_FIELDS = [
  'timestamp',
  'api_name',
  'category',
  'operation',
  'return_value',
  'call_stack',
] as const;

export const CAPTURE_HEADER = CAPTURE_FIELDS.join(',');
