// Browser shell: binds the pure renderers to the document and wires events.
// State is never trusted locally — every view can be rebuilt from the
// gateway, and a reload does exactly that.

import { GatewayClient } from './api.js';
import { ChatController, SessionController, type WebSocketLike } from './controller.js';
import { t } from './i18n.js';
import { renderChat, renderDashboard, renderSession } from './render.js';
import type { Language, Meta, Profile } from './types.js';
import type { ActiveView } from './viewstate.js';

interface Shell {
  client: GatewayClient;
  session: SessionController;
  chat: ChatController;
  profile: Profile | null;
  meta: Meta | null;
  view: ActiveView;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function language(shell: Shell): Language {
  return shell.profile?.language ?? 'en';
}

async function redraw(shell: Shell): Promise<void> {
  const root = byId('root');
  const lang = language(shell);
  if (shell.view === 'session') {
    root.innerHTML = renderSession(shell.session.state);
  } else if (shell.view === 'dashboard' && shell.profile && shell.meta) {
    root.innerHTML = renderDashboard(shell.profile, shell.meta, lang);
  } else {
    root.innerHTML = renderChat(shell.chat.view, lang);
  }
  byId('tabs').innerHTML = (['session', 'dashboard', 'chat'] as const)
    .map((view) => `<button data-view="${view}" class="${view === shell.view ? 'active' : ''}">` +
      `${t(lang, `view.${view}` as const)}</button>`)
    .join('');
}

async function rebuildFromGateway(shell: Shell): Promise<void> {
  shell.profile = await shell.client.profile();
  shell.meta = await shell.client.meta();
  shell.session.state = { ...shell.session.state, language: language(shell) };
  await shell.session.reloadFromGateway();
  await shell.chat.refresh();
  for (const topic of shell.profile.interests) {
    await shell.chat.openThread(`topic:${topic}`);
  }
  await redraw(shell);
}

function speechCapture(shell: Shell, input: HTMLInputElement): void {
  // browser speech when available, else the text box is the input path
  const SpeechRecognition =
    (window as unknown as { SpeechRecognition?: new () => unknown }).SpeechRecognition ??
    (window as unknown as { webkitSpeechRecognition?: new () => unknown }).webkitSpeechRecognition;
  if (SpeechRecognition === undefined) {
    input.focus();
    return;
  }
  const recognizer = new SpeechRecognition() as {
    lang: string;
    onresult: ((event: { results: { 0: { 0: { transcript: string } } } }) => void) | null;
    start(): void;
  };
  recognizer.lang = language(shell) === 'zh' ? 'zh-CN' : 'en-US';
  recognizer.onresult = (event) => {
    const transcript = event.results[0][0].transcript;
    void shell.client
      .sendAudioTurn(btoa(unescape(encodeURIComponent(transcript))))
      .then(async (turn) => {
        shell.session.state = (await import('./viewstate.js')).applyTurn(
          shell.session.state, transcript, turn,
        );
        await redraw(shell);
      });
  };
  recognizer.start();
}

async function handleClick(shell: Shell, target: HTMLElement): Promise<void> {
  const viewButton = target.closest<HTMLElement>('[data-view]');
  if (viewButton !== null) {
    shell.view = viewButton.dataset['view'] as ActiveView;
    await redraw(shell);
    return;
  }
  if (target.classList.contains('continue-button')) {
    await shell.session.resume();
    await redraw(shell);
    return;
  }
  if (target.classList.contains('send-turn')) {
    const input = byId('turn-input') as HTMLInputElement;
    if (input.value.trim()) {
      await shell.session.send(input.value);
      input.value = '';
      await redraw(shell);
    }
    return;
  }
  if (target.classList.contains('speak-button')) {
    speechCapture(shell, byId('turn-input') as HTMLInputElement);
    return;
  }
  if (target.classList.contains('report-button')) {
    const thread = target.closest<HTMLElement>('[data-conversation]');
    const messageId = Number(target.dataset['id']);
    if (thread !== null) {
      await shell.client.report(thread.dataset['conversation'] ?? '', messageId, 'reported from console');
    }
    return;
  }
  if (target.classList.contains('join-meeting')) {
    const thread = target.closest<HTMLElement>('[data-conversation]');
    const conversation = thread?.dataset['conversation'] ?? '';
    if (conversation.startsWith('topic:')) {
      const meeting = await shell.client.meetingUrl(conversation.slice('topic:'.length));
      window.open(meeting.join_url, '_blank');
    }
    return;
  }
  if (target.classList.contains('send-message')) {
    const thread = target.closest<HTMLElement>('[data-conversation]');
    const conversation = thread?.dataset['conversation'] ?? '';
    const input = thread?.querySelector<HTMLInputElement>('.message-input');
    if (input && input.value.trim()) {
      if (conversation.startsWith('topic:')) {
        await shell.client.postTopic(conversation.slice('topic:'.length), input.value);
      } else {
        const members = conversation.slice('direct:'.length).split('|');
        const other = members.find((member) => member !== shell.profile?.user) ?? members[0] ?? '';
        await shell.client.sendDirect(other, input.value);
      }
      await shell.chat.handleNotification({
        recipient: shell.profile?.user ?? '',
        conversation,
        hint: Number.MAX_SAFE_INTEGER,
      });
      input.value = '';
      await redraw(shell);
    }
  }
}

export async function boot(baseUrl: string, user: string, password: string): Promise<void> {
  const client = new GatewayClient(baseUrl);
  await client.login(user, password);
  const shell: Shell = {
    client,
    session: new SessionController(client),
    chat: new ChatController(client, (url) => {
      const socket = new WebSocket(url);
      const like: WebSocketLike = { onmessage: null, close: () => socket.close() };
      socket.onmessage = (event) => like.onmessage?.({ data: event.data });
      return like;
    }),
    profile: null,
    meta: null,
    view: 'session',
  };
  shell.chat.onUpdate = () => void redraw(shell);
  shell.chat.connect();
  await rebuildFromGateway(shell);
  document.body.addEventListener('click', (event) => {
    void handleClick(shell, event.target as HTMLElement);
  });
}

declare global {
  interface Window {
    noraBoot: typeof boot;
  }
}

if (typeof window !== 'undefined') {
  window.noraBoot = boot;
}
