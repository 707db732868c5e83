/**
 * Serves the scorer wire protocol over TCP or stdio.
 *
 * One session per connection; requests are answered strictly in order
 * (scoring is synchronous, so responses cannot interleave).
 */

import { createServer, Server, Socket } from "node:net";

import { Registry, answerLine } from "./wire.js";

function sessionHandler(scorers: Registry) {
  return (socket: Socket) => {
    let buffer = "";
    socket.on("data", (chunk) => {
      buffer += chunk.toString("utf-8");
      let index;
      while ((index = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, index).trim();
        buffer = buffer.slice(index + 1);
        if (line.length === 0) continue;
        socket.write(answerLine(line, scorers) + "\n");
      }
    });
    socket.on("error", () => socket.destroy());
  };
}

export function startTcpServer(
  scorers: Registry,
  port: number,
  host = "127.0.0.1",
): Promise<Server> {
  const server = createServer(sessionHandler(scorers));
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => resolve(server));
  });
}

export function serveStdio(scorers: Registry): void {
  let buffer = "";
  process.stdin.setEncoding("utf-8");
  process.stdin.on("data", (chunk: string) => {
    buffer += chunk;
    let index;
    while ((index = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, index).trim();
      buffer = buffer.slice(index + 1);
      if (line.length === 0) continue;
      process.stdout.write(answerLine(line, scorers) + "\n");
    }
  });
}
