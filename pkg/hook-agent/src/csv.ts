/** RFC-4180 field quoting: quote when a field carries a comma, quote, or newline. */
export function csvField(value: string): string {
  if (/[",\r\n]/.test(value)) {
    return '"' + value.replace(/"/g, '""') + '"';
  }
  return value;
}

export function csvRow(fields: string[]): string {
  return fields.map(csvField).join(',') + '\r\n';
}
