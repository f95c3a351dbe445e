import { ApiClient } from './client';
import { render } from './views';
import { WizardController } from './wizard';

const baseUrl = new URLSearchParams(location.search).get('service') ?? 'http://127.0.0.1:8765';

const controller = new WizardController(new ApiClient(baseUrl));
const root = document.getElementById('app')!;

controller.subscribe(() => render(root, controller));

// stale state is refetched whenever the tab regains focus
window.addEventListener('focus', () => {
  if (controller.state.sessionId) void controller.refresh();
});

void controller.start().then(() => render(root, controller));
