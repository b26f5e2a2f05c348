// Controllers connect the gateway client to the pure view state. They are
// environment-agnostic: the browser shell passes the native WebSocket, tests
// pass one from the `ws` package.

import type { GatewayClient } from './api.js';
import type { ChatNotification, Language } from './types.js';
import {
  applyProgress,
  applySessionStart,
  applySync,
  applyTurn,
  emptyChatView,
  emptyConsoleState,
  emptyThread,
  notificationNeedsSync,
  rebuildSessionView,
  type ChatViewState,
  type ConsoleViewState,
} from './viewstate.js';

export class SessionController {
  state: ConsoleViewState;

  constructor(private client: GatewayClient, language: Language = 'en') {
    this.state = emptyConsoleState(language);
  }

  async start(day: number): Promise<void> {
    const started = await this.client.startSession(day);
    this.state = applySessionStart(this.state, started);
    await this.refreshProgress();
  }

  async send(text: string): Promise<void> {
    const turn = await this.client.sendTurn(text);
    this.state = applyTurn(this.state, text, turn);
    if (turn.summary !== undefined) {
      await this.refreshProgress(); // the closed day just landed in the records
    }
  }

  async resume(): Promise<void> {
    const turn = await this.client.resume();
    const resumeText = this.state.language === 'zh' ? '继续' : 'continue';
    this.state = applyTurn(this.state, resumeText, turn);
  }

  async refreshProgress(): Promise<void> {
    this.state = applyProgress(this.state, await this.client.progress());
  }

  /** Rebuild the whole view from gateway reads, as a page reload would. */
  async reloadFromGateway(): Promise<ConsoleViewState> {
    const [read, progress] = await Promise.all([this.client.readSession(), this.client.progress()]);
    this.state = rebuildSessionView(read, progress, this.state.language);
    return this.state;
  }
}

export interface WebSocketLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  close(): void;
}

export class ChatController {
  view: ChatViewState = emptyChatView();
  private socket: WebSocketLike | null = null;
  onUpdate: (() => void) | null = null;

  constructor(
    private client: GatewayClient,
    private socketFactory: (url: string) => WebSocketLike,
  ) {}

  async refresh(): Promise<void> {
    const [contacts, profile] = await Promise.all([this.client.contacts(), this.client.profile()]);
    this.view = { ...this.view, contacts: contacts.contacts, interests: profile.interests };
  }

  /** Open (or re-open) a thread: full fetch from cursor 0. */
  async openThread(conversation: string): Promise<void> {
    const thread = emptyThread(conversation);
    const synced = await this.client.sync(conversation, thread.cursor);
    this.view = {
      ...this.view,
      threads: { ...this.view.threads, [conversation]: applySync(thread, synced) },
    };
  }

  /** Incremental catch-up on a notification; no reload, no refetch-from-zero. */
  async handleNotification(notification: ChatNotification): Promise<boolean> {
    const thread = this.view.threads[notification.conversation];
    if (thread === undefined || !notificationNeedsSync(thread, notification)) {
      return false;
    }
    const synced = await this.client.sync(thread.conversation, thread.cursor);
    this.view = {
      ...this.view,
      threads: { ...this.view.threads, [thread.conversation]: applySync(thread, synced) },
    };
    this.onUpdate?.();
    return true;
  }

  connect(): void {
    this.socket = this.socketFactory(this.client.websocketUrl());
    this.socket.onmessage = (event) => {
      const notification = JSON.parse(String(event.data)) as ChatNotification;
      void this.handleNotification(notification);
    };
  }

  disconnect(): void {
    this.socket?.close();
    this.socket = null;
  }
}
