// Thin typed client over the gateway's REST surface. The console keeps no
// authoritative state: everything it shows can be re-fetched from here.

import type {
  ChatMessage,
  Contact,
  Meta,
  Profile,
  Progress,
  SessionRead,
  StartResult,
  SyncResult,
  TurnResult,
} from './types.js';

export class GatewayError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class GatewayClient {
  constructor(public baseUrl: string, public token: string | null = null) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.token) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new GatewayError(response.status, (payload as { error?: string }).error ?? 'request failed');
    }
    return payload as T;
  }

  async register(user: string, alias: string, password: string, language = 'en'): Promise<string> {
    const out = await this.request<{ token: string }>('POST', '/api/auth/register', {
      user, alias, password, language,
    });
    this.token = out.token;
    return out.token;
  }

  async login(user: string, password: string): Promise<string> {
    const out = await this.request<{ token: string }>('POST', '/api/auth/login', { user, password });
    this.token = out.token;
    return out.token;
  }

  startSession(day: number): Promise<StartResult> {
    return this.request('POST', '/api/session/start', { day });
  }

  sendTurn(text: string): Promise<TurnResult> {
    return this.request('POST', '/api/session/turn', { text });
  }

  sendAudioTurn(audioBase64: string): Promise<TurnResult> {
    return this.request('POST', '/api/session/turn', { audio: audioBase64 });
  }

  resume(): Promise<TurnResult> {
    return this.request('POST', '/api/session/resume');
  }

  readSession(): Promise<SessionRead> {
    return this.request('GET', '/api/session');
  }

  progress(): Promise<Progress> {
    return this.request('GET', '/api/progress');
  }

  profile(): Promise<Profile> {
    return this.request('GET', '/api/profile');
  }

  updateProfile(patch: Record<string, unknown>): Promise<Profile> {
    return this.request('PUT', '/api/profile', patch);
  }

  setInterests(topics: string[]): Promise<{ subscribed: string[]; unsubscribed: string[] }> {
    return this.request('PUT', '/api/profile/interests', { topics });
  }

  meta(): Promise<Meta> {
    return this.request('GET', '/api/meta');
  }

  contacts(): Promise<{ contacts: Contact[] }> {
    return this.request('GET', '/api/chat/contacts');
  }

  addContact(alias: string): Promise<Contact> {
    return this.request('POST', '/api/chat/contacts', { alias });
  }

  sendDirect(to: string, body: string): Promise<{ id: number; conversation: string }> {
    return this.request('POST', '/api/chat/direct', { to, body });
  }

  sync(conversation: string, lastSeen: number): Promise<SyncResult> {
    const query = new URLSearchParams({ conversation, last_seen: String(lastSeen) });
    return this.request('GET', `/api/chat/sync?${query}`);
  }

  postTopic(topic: string, body: string): Promise<{ id: number; conversation: string }> {
    return this.request('POST', `/api/chat/topic/${encodeURIComponent(topic)}`, { body });
  }

  report(conversation: string, messageId: number, reason: string): Promise<unknown> {
    return this.request('POST', '/api/chat/report', {
      conversation, message_id: messageId, reason,
    });
  }

  meetingUrl(topic: string): Promise<{ topic: string; join_url: string }> {
    return this.request('POST', `/api/chat/meeting/${encodeURIComponent(topic)}`);
  }

  websocketUrl(): string {
    const ws = this.baseUrl.replace(/^http/, 'ws');
    return `${ws}/ws?token=${this.token ?? ''}`;
  }
}

export type { ChatMessage };
