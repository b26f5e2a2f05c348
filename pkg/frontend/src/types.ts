// Wire types for the gateway's JSON payloads.

export type Language = 'en' | 'zh';

export interface EmpathyScores {
  sentiment: { label: 'positive' | 'negative'; confidence: number };
  emotion: Record<string, number>;
  stress: number;
}

export interface BotResponse {
  text: string;
  directive: string;
  directive_args: Record<string, unknown>;
  variant: string;
  template_key: string;
  empathy_echo: EmpathyScores | null;
}

export interface SessionInfo {
  day: number;
  phase: string;
  language?: Language;
  user?: string;
}

export interface StartResult {
  session: SessionInfo;
  response: BotResponse;
}

export interface TurnResult {
  response: BotResponse;
  scores: EmpathyScores;
  frame: { intent: string; slots: Record<string, string>; confidence: number };
  session: SessionInfo;
  summary?: Record<string, unknown>;
}

export interface SessionTurn {
  speaker: 'user' | 'bot';
  text: string;
  scores: EmpathyScores | null;
}

export interface SessionView {
  user: string;
  day: number;
  phase: string;
  language: Language;
  closed: boolean;
  turns: SessionTurn[];
  activity: { kind: string; video: string } | null;
  escalated: boolean;
  hotline: string | null;
}

export interface SessionRead {
  open: boolean;
  session: SessionView | null;
}

export interface ProgressDay {
  day: number;
  temperature?: number | null;
  temp_class?: string | null;
  escalated?: boolean;
  stress_mean?: number | null;
  sentiment_confidence_mean?: number | null;
  sentiment_positive_share?: number | null;
  emotion_mean?: Record<string, number> | null;
}

export interface Progress {
  user: string;
  days: ProgressDay[];
}

export interface Profile {
  user: string;
  alias: string;
  language: Language;
  program: { name: string; length_days: number };
  interests: string[];
  contacts: string[];
  activity_preferences: {
    per_day: Record<string, { kind: string; video: string }>;
    kinds: string[];
  };
}

export interface Meta {
  topics: string[];
  activity_kinds: string[];
  languages: Language[];
  emotion_classes: string[];
  program_default_days: number;
}

export interface ChatMessage {
  id: number;
  conversation: string;
  sender: string;
  body: string;
  sent_at: number;
}

export interface SyncResult {
  messages: ChatMessage[];
  cursor: { conversation: string; last_seen: number };
}

export interface ChatNotification {
  recipient: string;
  conversation: string;
  hint: number;
}

export interface Contact {
  user: string;
  alias: string;
}
