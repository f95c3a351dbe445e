/** DOM rendering for the five wizard steps. No table math happens here. */

import { PREVIEW_ROW_CAP } from './client';
import { buildGrid, formatScore, scoreBarWidth } from './grid';
import type { WizardController, WizardStage } from './wizard';
import { STAGE_ORDER } from './wizard';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else if (key === 'title') node.title = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

const STAGE_LABELS: Record<WizardStage, string> = {
  query: '1 · Query table',
  discover: '2 · Discover',
  'select-align': '3 · Select & align',
  integrate: '4 · Integrate',
  analyze: '5 · Analyze',
};

export function render(root: HTMLElement, controller: WizardController): void {
  const { state } = controller;
  root.replaceChildren();

  const nav = el('nav', { class: 'steps' });
  for (const stage of STAGE_ORDER) {
    nav.append(
      el('span', { class: stage === state.stage ? 'step active' : 'step' }, [
        STAGE_LABELS[stage],
      ]),
    );
  }
  root.append(nav);

  if (state.error) root.append(el('div', { class: 'error' }, [state.error]));
  if (state.busy) root.append(el('div', { class: 'busy' }, ['waiting for the service…']));

  switch (state.stage) {
    case 'query':
      root.append(queryView(controller));
      break;
    case 'discover':
      root.append(discoverView(controller));
      break;
    case 'select-align':
      root.append(selectAlignView(controller));
      break;
    case 'integrate':
      root.append(integrateView(controller));
      break;
    case 'analyze':
      root.append(integrateView(controller), analyzeView(controller));
      break;
  }
}

function queryView(controller: WizardController): HTMLElement {
  const file = el('input', { type: 'file', accept: '.csv' });
  const uploadBtn = el('button', {}, ['Upload CSV']);
  uploadBtn.addEventListener('click', async () => {
    const chosen = (file as HTMLInputElement).files?.[0];
    if (!chosen) return;
    await controller.uploadQueryCsv(await chosen.text());
  });

  const prompt = el('input', { type: 'text', placeholder: 'prompt, e.g. covid cases by city' });
  const rows = el('input', { type: 'number', value: '5', min: '1' });
  const cols = el('input', { type: 'number', value: '5', min: '1' });
  const genBtn = el('button', {}, ['Generate']);
  genBtn.addEventListener('click', async () => {
    await controller.generateQuery(
      (prompt as HTMLInputElement).value,
      Number((rows as HTMLInputElement).value),
      Number((cols as HTMLInputElement).value),
    );
  });

  return el('section', { class: 'panel' }, [
    el('h2', {}, ['Provide a query table']),
    el('div', { class: 'row' }, [file, uploadBtn]),
    el('p', {}, ['… or generate one from a prompt:']),
    el('div', { class: 'row' }, [prompt, rows, cols, genBtn]),
  ]);
}

function discoverView(controller: WizardController): HTMLElement {
  const { state } = controller;
  const method = el('select', {});
  for (const name of state.methods) method.append(el('option', { value: name }, [name]));
  const column = el('select', {});
  column.append(el('option', { value: '' }, ['(no intent column)']));
  for (const name of state.queryColumns) column.append(el('option', { value: name }, [name]));
  const k = el('input', { type: 'number', value: '10', min: '1' });
  const runBtn = el('button', {}, ['Search the lake']);
  runBtn.addEventListener('click', async () => {
    const chosenColumn = (column as HTMLSelectElement).value || null;
    await controller.discover(
      (method as HTMLSelectElement).value,
      Number((k as HTMLInputElement).value),
      chosenColumn,
    );
  });
  return el('section', { class: 'panel' }, [
    el('h2', {}, ['Discover related tables']),
    el('div', { class: 'row' }, [method, column, k, runBtn]),
  ]);
}

function selectAlignView(controller: WizardController): HTMLElement {
  const { state } = controller;
  const panel = el('section', { class: 'panel' }, [el('h2', {}, ['Select tables to integrate'])]);

  for (const [name, result] of Object.entries(state.discoveries)) {
    const list = el('ul', { class: 'results' });
    for (const entry of result.results) {
      const checkbox = el('input', { type: 'checkbox' }) as HTMLInputElement;
      checkbox.checked = state.selection.has(entry.table_id);
      checkbox.addEventListener('change', () => controller.toggleSelection(entry.table_id));
      const bar = el('span', { class: 'bar' });
      bar.style.width = `${scoreBarWidth(entry)}%`;
      const previewBtn = el('button', { class: 'link' }, ['preview']);
      const holder = el('div', { class: 'preview' });
      previewBtn.addEventListener('click', async () => {
        const preview = await controller.client.preview(entry.table_id, PREVIEW_ROW_CAP);
        holder.replaceChildren(
          el('table', {}, [
            el('tr', {}, preview.columns.map((c) => el('th', {}, [c]))),
            ...preview.rows.map((row) =>
              el('tr', {}, row.map((cell) => el('td', {}, [cell.value ?? '']))),
            ),
          ]),
        );
      });
      list.append(
        el('li', {}, [
          checkbox,
          el('code', {}, [entry.table_id]),
          el('span', { class: 'score' }, [formatScore(entry.score)]),
          el('span', { class: 'barwrap' }, [bar]),
          previewBtn,
          holder,
        ]),
      );
    }
    panel.append(el('h3', {}, [name]), list);
    if (result.hint) panel.append(el('p', { class: 'hint' }, [result.hint]));
  }

  const confirmBtn = el('button', {}, ['Use selected tables']) as HTMLButtonElement;
  confirmBtn.disabled = !controller.canConfirmSelection();
  confirmBtn.addEventListener('click', async () => {
    await controller.confirmSelection();
    await controller.align(null);
  });
  panel.append(confirmBtn);

  if (state.mapping) panel.append(mappingView(controller));
  return panel;
}

function mappingView(controller: WizardController): HTMLElement {
  const mapping = controller.state.mapping!;
  const groups = Object.keys(mapping);
  const box = el('div', { class: 'mapping' }, [
    el('h3', {}, ['Integration IDs']),
    el('p', { class: 'hint' }, ['drag a column onto another group (or use its selector) to regroup']),
  ]);
  for (const warning of controller.state.mappingWarnings) {
    box.append(el('p', { class: 'hint' }, [warning]));
  }
  for (const group of groups) {
    const list = el('ul', {});
    for (const [table, column] of mapping[group]) {
      const chip = el('code', { class: 'chip', draggable: 'true' }, [`${table} · ${column}`]);
      chip.addEventListener('dragstart', (event) => {
        (event as DragEvent).dataTransfer?.setData(
          'application/x-column',
          JSON.stringify([table, column]),
        );
      });
      const mover = el('select', {});
      for (const target of groups) {
        const option = el('option', { value: target }, [target]);
        if (target === group) option.setAttribute('selected', 'selected');
        mover.append(option);
      }
      mover.addEventListener('change', () => {
        controller.moveColumn(table, column, (mover as HTMLSelectElement).value);
      });
      list.append(el('li', {}, [chip, mover]));
    }
    const header = el('h4', { class: 'droptarget' }, [group]);
    header.addEventListener('dragover', (event) => event.preventDefault());
    header.addEventListener('drop', (event) => {
      event.preventDefault();
      const payload = (event as DragEvent).dataTransfer?.getData('application/x-column');
      if (!payload) return;
      const [table, column] = JSON.parse(payload) as [string, string];
      controller.moveColumn(table, column, group);
    });
    box.append(header, list);
  }
  return box;
}

function integrateView(controller: WizardController): HTMLElement {
  const { state } = controller;
  const panel = el('section', { class: 'panel' }, [el('h2', {}, ['Integrate'])]);
  const buttons = el('div', { class: 'row' });
  for (const operator of state.operators) {
    const btn = el('button', {}, [`run ${operator}`]) as HTMLButtonElement;
    btn.disabled = !controller.canIntegrate();
    btn.addEventListener('click', () => void controller.integrate(operator));
    buttons.append(btn);
  }
  panel.append(buttons);

  const grids = el('div', { class: 'grids' });
  for (const grid of Object.values(state.grids)) {
    const view = buildGrid(grid);
    const table = el('table', { class: 'grid' });
    table.append(el('tr', {}, view.columns.map((c) => el('th', {}, [c]))));
    for (const row of view.rows) {
      const tr = el('tr', { title: row.lineage });
      for (const cell of row.cells) {
        tr.append(
          el('td', { class: cell.kindClass, title: cell.tooltip }, [
            cell.marker ? cell.marker : cell.text,
          ]),
        );
      }
      table.append(tr);
    }
    grids.append(el('div', { class: 'gridbox' }, [el('h3', {}, [view.operator]), table]));
  }
  panel.append(grids);
  return panel;
}

function analyzeView(controller: WizardController): HTMLElement {
  const { state } = controller;
  const panel = el('section', { class: 'panel' }, [el('h2', {}, ['Analyze'])]);
  const kind = el('select', {}, [
    el('option', { value: 'aggregate' }, ['aggregate']),
    el('option', { value: 'correlate' }, ['correlate']),
    el('option', { value: 'resolve' }, ['resolve entities']),
  ]);
  const a = el('input', { type: 'text', placeholder: 'column / x / group-by' });
  const b = el('input', { type: 'text', placeholder: 'measure / y / threshold' });
  const func = el('select', {}, ['min', 'max', 'mean', 'sum', 'count'].map((f) => el('option', { value: f }, [f])));
  const runBtn = el('button', {}, ['Run analysis']);
  runBtn.addEventListener('click', async () => {
    const kindValue = (kind as HTMLSelectElement).value as 'aggregate' | 'correlate' | 'resolve';
    if (kindValue === 'aggregate') {
      await controller.analyze({
        kind: kindValue,
        group_by: (a as HTMLInputElement).value ? [(a as HTMLInputElement).value] : [],
        measure: (b as HTMLInputElement).value,
        func: (func as HTMLSelectElement).value,
      });
    } else if (kindValue === 'correlate') {
      await controller.analyze({
        kind: kindValue,
        x: (a as HTMLInputElement).value,
        y: (b as HTMLInputElement).value,
      });
    } else {
      await controller.analyze({
        kind: kindValue,
        threshold: Number((b as HTMLInputElement).value || '0.85'),
      });
    }
  });
  panel.append(el('div', { class: 'row' }, [kind, a, b, func, runBtn]));

  for (const analysis of state.analyses) {
    panel.append(
      el('pre', { class: 'analysis' }, [JSON.stringify(analysis, null, 2)]),
    );
  }
  return panel;
}
