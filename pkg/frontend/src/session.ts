// NDJSON session against a gridkit protocol server.
//
// One request is in flight at a time; while it runs the server may emit
// reverse-callback lines ({"cb": k, ...}) that are answered from locally
// registered handlers before the response arrives.

import { spawn, type ChildProcess } from "node:child_process";
import type { Readable, Writable } from "node:stream";

export interface ErrorBody {
  code: string;
  message: string;
}

export class ServerError extends Error {
  readonly code: string;

  constructor(body: ErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.code = body.code;
  }
}

export interface CallbackRequest {
  cb: number;
  fn: string;
  kind: "global" | "local";
  element?: number;
  points: number[][];
}

export type CallbackHandler = (
  element: number | undefined,
  points: number[][],
) => number[];

interface Response {
  id: number | null;
  ok: boolean;
  result?: unknown;
  error?: ErrorBody;
}

function splitLines(onLine: (line: string) => void): (chunk: Buffer) => void {
  let pending = "";
  return (chunk: Buffer) => {
    pending += chunk.toString("utf-8");
    for (;;) {
      const index = pending.indexOf("\n");
      if (index < 0) break;
      const line = pending.slice(0, index);
      pending = pending.slice(index + 1);
      if (line.trim().length > 0) onLine(line);
    }
  };
}

export class Session {
  /** Raw lines received from the server, in order (responses + callbacks). */
  readonly transcript: string[] = [];
  /** Reverse callbacks answered so far. */
  callbackCount = 0;

  private readonly handlers = new Map<string, CallbackHandler>();
  private readonly lineQueue: string[] = [];
  private waiter: ((line: string) => void) | null = null;
  private nextId = 0;
  private chain: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly stdin: Writable,
    stdout: Readable,
    private readonly child?: ChildProcess,
  ) {
    stdout.on("data", splitLines((line) => this.pushLine(line)));
  }

  /** Spawn the core server (override with GRIDKIT_SERVER_COMMAND). */
  static spawn(command?: string[]): Session {
    const argv = command ??
      (process.env.GRIDKIT_SERVER_COMMAND?.split(" ") ?? [
        "python3",
        "-m",
        "gridkit.cli",
        "serve",
        "--stdio",
      ]);
    const child = spawn(argv[0], argv.slice(1), {
      stdio: ["pipe", "pipe", "inherit"],
    });
    if (child.stdin === null || child.stdout === null) {
      throw new Error("failed to open pipes to the gridkit server");
    }
    return new Session(child.stdin, child.stdout, child);
  }

  registerHandler(fnId: string, handler: CallbackHandler): void {
    this.handlers.set(fnId, handler);
  }

  /** Send one request and resolve with its result (requests serialize). */
  request(op: string, args: Record<string, unknown> = {}): Promise<unknown> {
    const run = this.chain.then(() => this.exchange(op, args));
    this.chain = run.catch(() => undefined);
    return run;
  }

  close(): void {
    this.stdin.end();
    this.child?.kill();
  }

  private pushLine(line: string): void {
    if (this.waiter !== null) {
      const resolve = this.waiter;
      this.waiter = null;
      resolve(line);
    } else {
      this.lineQueue.push(line);
    }
  }

  private readLine(): Promise<string> {
    const queued = this.lineQueue.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    return new Promise((resolve) => {
      this.waiter = resolve;
    });
  }

  private send(message: unknown): void {
    this.stdin.write(JSON.stringify(message) + "\n");
  }

  private async exchange(
    op: string,
    args: Record<string, unknown>,
  ): Promise<unknown> {
    const id = ++this.nextId;
    this.send({ id, op, args });
    for (;;) {
      const line = await this.readLine();
      this.transcript.push(line);
      const message = JSON.parse(line) as Response | CallbackRequest;
      if ("cb" in message) {
        this.answerCallback(message);
        continue;
      }
      if (message.id !== id) {
        throw new Error(
          `response for request ${message.id}, expected ${id}`,
        );
      }
      if (!message.ok) {
        throw new ServerError(message.error ?? {
          code: "internal",
          message: "missing error body",
        });
      }
      return message.result;
    }
  }

  private answerCallback(message: CallbackRequest): void {
    this.callbackCount += 1;
    const handler = this.handlers.get(message.fn);
    if (handler === undefined) {
      // let the server fail the request with a shape error
      this.send({ cb: message.cb, values: [] });
      return;
    }
    const values = handler(message.element, message.points);
    this.send({ cb: message.cb, values: Array.from(values) });
  }
}
