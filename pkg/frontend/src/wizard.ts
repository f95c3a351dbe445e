/**
 * Wizard state machine.
 *
 * The controller mirrors the service's session stages and never advances its
 * own stage until the service has confirmed the write (every action awaits
 * the response before mutating local state). Mapping edits are held locally
 * and PUT to the service just before the next integrate. `refresh()` refetches
 * the persisted session, used on window focus to drop stale state.
 */

import { ApiClient } from './client';
import type {
  AnalysisResultDto,
  AnalyzeRequestDto,
  DiscoveryDto,
  GridDto,
  MappingDto,
  SessionDto,
} from './types';

export type WizardStage = 'query' | 'discover' | 'select-align' | 'integrate' | 'analyze';

export const STAGE_ORDER: WizardStage[] = [
  'query',
  'discover',
  'select-align',
  'integrate',
  'analyze',
];

/** The endpoint sequence a full scripted pass issues, in order. */
export const WIZARD_PASS_SEQUENCE = [
  'POST /sessions',
  'GET /methods',
  'GET /operators',
  'POST /sessions/{id}/query-table',
  'POST /sessions/{id}/discover',
  'POST /sessions/{id}/selection',
  'POST /sessions/{id}/align',
  'POST /sessions/{id}/integrate',
  'POST /sessions/{id}/integrate',
  'POST /sessions/{id}/analyze',
] as const;

export interface WizardState {
  stage: WizardStage;
  sessionId: string | null;
  methods: string[];
  operators: string[];
  queryColumns: string[];
  discoveries: Record<string, DiscoveryDto>;
  selection: Set<string>;
  selectionConfirmed: boolean;
  mapping: MappingDto | null;
  mappingDirty: boolean;
  mappingWarnings: string[];
  grids: Record<string, GridDto>;
  analyses: AnalysisResultDto[];
  busy: boolean;
  error: string | null;
}

type Listener = (state: WizardState) => void;

export class WizardController {
  readonly state: WizardState = {
    stage: 'query',
    sessionId: null,
    methods: [],
    operators: [],
    queryColumns: [],
    discoveries: {},
    selection: new Set(),
    selectionConfirmed: false,
    mapping: null,
    mappingDirty: false,
    mappingWarnings: [],
    grids: {},
    analyses: [],
    busy: false,
    error: null,
  };

  private listeners: Listener[] = [];

  constructor(readonly client: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private async action<T>(fn: () => Promise<T>): Promise<T> {
    this.state.busy = true;
    this.state.error = null;
    this.notify();
    try {
      return await fn();
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
      throw err;
    } finally {
      this.state.busy = false;
      this.notify();
    }
  }

  private requireSession(): string {
    if (!this.state.sessionId) throw new Error('no session; call start() first');
    return this.state.sessionId;
  }

  /** Create the session and load the method/operator catalogs. */
  async start(): Promise<void> {
    await this.action(async () => {
      const session = await this.client.createSession();
      this.state.sessionId = session.session_id;
      this.state.methods = (await this.client.methods()).methods;
      this.state.operators = (await this.client.operators()).operators;
      this.state.stage = 'query';
    });
  }

  async uploadQueryCsv(csvText: string): Promise<void> {
    const id = this.requireSession();
    await this.action(async () => {
      const session = await this.client.uploadQueryCsv(id, csvText);
      this.applyQuery(session);
    });
  }

  async generateQuery(prompt: string, rows: number, cols: number): Promise<void> {
    const id = this.requireSession();
    await this.action(async () => {
      const session = await this.client.generateQuery(id, prompt, rows, cols);
      this.applyQuery(session);
    });
  }

  private applyQuery(session: SessionDto): void {
    this.state.queryColumns = session.query?.columns ?? [];
    this.state.discoveries = {};
    this.state.selection = new Set();
    this.state.selectionConfirmed = false;
    this.state.mapping = null;
    this.state.mappingDirty = false;
    this.state.grids = {};
    this.state.analyses = [];
    this.state.stage = 'discover';
  }

  async discover(
    method: string,
    k: number,
    queryColumn: string | null = null,
    threshold: number | null = null,
  ): Promise<DiscoveryDto> {
    const id = this.requireSession();
    return this.action(async () => {
      const result = await this.client.discover(id, method, k, queryColumn, threshold);
      this.state.discoveries = { ...this.state.discoveries, [method]: result };
      this.state.stage = 'select-align';
      return result;
    });
  }

  /** Union of all discovered table ids, ranked list per method preserved. */
  discoveredTableIds(): string[] {
    const ids = new Set<string>();
    for (const result of Object.values(this.state.discoveries)) {
      for (const entry of result.results) ids.add(entry.table_id);
    }
    return [...ids].sort();
  }

  toggleSelection(tableId: string): void {
    if (this.state.selection.has(tableId)) {
      this.state.selection.delete(tableId);
    } else {
      this.state.selection.add(tableId);
    }
    this.state.selectionConfirmed = false;
    this.notify();
  }

  /** Zero selected candidates must keep the integrate path disabled. */
  canConfirmSelection(): boolean {
    return this.state.selection.size > 0;
  }

  canIntegrate(): boolean {
    return this.state.selectionConfirmed && this.state.mapping !== null;
  }

  async confirmSelection(): Promise<void> {
    const id = this.requireSession();
    if (!this.canConfirmSelection()) throw new Error('select at least one table');
    await this.action(async () => {
      await this.client.setSelection(id, [...this.state.selection].sort());
      this.state.selectionConfirmed = true;
    });
  }

  async align(tau: number | null = null): Promise<void> {
    const id = this.requireSession();
    await this.action(async () => {
      const aligned = await this.client.align(id, tau);
      this.state.mapping = aligned.mapping;
      this.state.mappingWarnings = aligned.warnings;
      this.state.mappingDirty = false;
      this.state.stage = 'integrate';
    });
  }

  /** Local mapping edit: move one column into another integration id group. */
  moveColumn(tableId: string, column: string, targetGroup: string): void {
    const mapping = this.state.mapping;
    if (!mapping) throw new Error('align first');
    if (!(targetGroup in mapping)) throw new Error(`unknown integration id ${targetGroup}`);
    const next: MappingDto = {};
    for (const [group, members] of Object.entries(mapping)) {
      next[group] = members.filter(([t, c]) => !(t === tableId && c === column));
    }
    next[targetGroup] = [...next[targetGroup], [tableId, column]];
    for (const group of Object.keys(next)) {
      if (next[group].length === 0) delete next[group];
    }
    this.state.mapping = next;
    this.state.mappingDirty = true;
    this.notify();
  }

  async integrate(operator: string): Promise<GridDto> {
    const id = this.requireSession();
    if (!this.canIntegrate()) throw new Error('confirm a non-empty selection and align first');
    return this.action(async () => {
      if (this.state.mappingDirty && this.state.mapping) {
        const saved = await this.client.putMapping(id, this.state.mapping);
        this.state.mapping = saved.mapping;
        this.state.mappingDirty = false;
        this.state.grids = {};
      }
      const grid = await this.client.integrate(id, operator);
      this.state.grids = { ...this.state.grids, [operator]: grid };
      this.state.stage = 'integrate';
      return grid;
    });
  }

  async analyze(spec: AnalyzeRequestDto): Promise<AnalysisResultDto> {
    const id = this.requireSession();
    return this.action(async () => {
      const result = await this.client.analyze(id, spec);
      this.state.analyses = [...this.state.analyses, result];
      this.state.stage = 'analyze';
      return result;
    });
  }

  /** Refetch persisted state (used on window focus; drops stale local view). */
  async refresh(): Promise<void> {
    const id = this.requireSession();
    await this.action(async () => {
      const session = await this.client.getSession(id);
      this.state.queryColumns = session.query?.columns ?? [];
      this.state.discoveries = session.discoveries ?? {};
      this.state.selection = new Set(session.selection ?? []);
      this.state.selectionConfirmed = (session.selection ?? []).length > 0;
      this.state.mapping = session.mapping ?? null;
      this.state.mappingDirty = false;
      this.state.mappingWarnings = session.mapping_warnings ?? [];
      this.state.grids = session.integration_grids ?? {};
      this.state.analyses = session.analyses ?? [];
      const done = session.stages_done ?? [];
      if (done.includes('integrate')) this.state.stage = 'analyze';
      else if (done.includes('align')) this.state.stage = 'integrate';
      else if (done.includes('discover')) this.state.stage = 'select-align';
      else if (done.includes('query')) this.state.stage = 'discover';
      else this.state.stage = 'query';
    });
  }
}
