import { SchemaError } from "../csv";

/** Shared entry point: schema problems exit 2, everything else 1. */
export function run(usage: string, minArgs: number, fn: (args: string[]) => void): void {
  const args = process.argv.slice(2);
  if (args.length < minArgs) {
    console.error(`usage: ${usage}`);
    process.exit(2);
  }
  try {
    fn(args);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(err instanceof SchemaError ? 2 : 1);
  }
}
