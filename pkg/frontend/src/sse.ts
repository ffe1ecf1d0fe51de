/**
 * Server-sent events over fetch streaming.
 *
 * Implemented on ReadableStream instead of the native EventSource so the
 * same code runs in the browser and under node-based tests, and so the
 * Authorization header can accompany the request.
 */

export interface SseMessage {
  id: string;
  event: string;
  data: string;
}

/** Incremental SSE frame parser; feed it decoded text chunks. */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseMessage[] {
    this.buffer += chunk.replace(/\r\n/g, "\n");
    const messages: SseMessage[] = [];
    let index: number;
    while ((index = this.buffer.indexOf("\n\n")) >= 0) {
      const frame = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 2);
      const message: SseMessage = { id: "", event: "message", data: "" };
      const dataLines: string[] = [];
      for (const line of frame.split("\n")) {
        if (line.startsWith("data:")) dataLines.push(line.slice(5).trimStart());
        else if (line.startsWith("event:")) message.event = line.slice(6).trim();
        else if (line.startsWith("id:")) message.id = line.slice(3).trim();
      }
      message.data = dataLines.join("\n");
      if (message.data.length > 0 || message.id.length > 0) messages.push(message);
    }
    return messages;
  }
}

export interface SseHandle {
  done: Promise<void>;
  abort(): void;
}

export function streamSse(
  url: string,
  headers: Record<string, string>,
  onMessage: (message: SseMessage) => void,
): SseHandle {
  const controller = new AbortController();
  const done = (async () => {
    const response = await fetch(url, {
      headers: { ...headers, Accept: "text/event-stream" },
      signal: controller.signal,
    });
    if (!response.ok || !response.body) {
      throw new Error(`event stream failed: HTTP ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done: finished, value } = await reader.read();
      if (finished) break;
      for (const message of parser.push(decoder.decode(value, { stream: true }))) {
        onMessage(message);
      }
    }
  })();
  return {
    done: done.catch((error) => {
      if (controller.signal.aborted) return; // caller hung up, not an error
      throw error;
    }),
    abort: () => controller.abort(),
  };
}
