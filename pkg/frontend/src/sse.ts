/** Minimal server-sent-events client over fetch streaming.
 *
 * Node 20 has no EventSource, and the run stream is finite (it ends with an
 * `event: end` frame), so an async iterator over parsed frames fits better
 * than the browser API anyway.
 */

export interface SseFrame {
  event: string;
  id: string | null;
  data: string;
}

/** Incremental parser; feed arbitrary chunk boundaries, collect frames. */
export class SseParser {
  private buffer = '';
  private event = '';
  private id: string | null = null;
  private data: string[] = [];

  push(chunk: string): SseFrame[] {
    this.buffer += chunk.replace(/\r\n/g, '\n');
    const frames: SseFrame[] = [];
    let index: number;
    while ((index = this.buffer.indexOf('\n')) >= 0) {
      const line = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 1);
      const frame = this.line(line);
      if (frame) frames.push(frame);
    }
    return frames;
  }

  private line(line: string): SseFrame | null {
    if (line === '') {
      if (this.data.length === 0 && this.event === '') return null;
      const frame: SseFrame = {
        event: this.event || 'message',
        id: this.id,
        data: this.data.join('\n'),
      };
      this.event = '';
      this.data = [];
      return frame;
    }
    if (line.startsWith(':')) return null; // comment / keep-alive
    const colon = line.indexOf(':');
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? '' : line.slice(colon + 1);
    if (value.startsWith(' ')) value = value.slice(1);
    if (field === 'event') this.event = value;
    else if (field === 'data') this.data.push(value);
    else if (field === 'id') this.id = value;
    return null;
  }
}

/** Stream a response body as parsed SSE frames. */
export async function* sseFrames(body: ReadableStream<Uint8Array>): AsyncGenerator<SseFrame> {
  const parser = new SseParser();
  const decoder = new TextDecoder();
  const reader = body.getReader();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
        yield frame;
      }
    }
    for (const frame of parser.push(decoder.decode())) yield frame;
  } finally {
    reader.releaseLock();
  }
}
