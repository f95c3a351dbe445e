/**
 * Typed client for the lakefuse service.
 *
 * Every call is appended to `log` as "METHOD /path" with the session id
 * normalized to {id}, so tests can assert the exact endpoint sequence a
 * wizard pass issues.
 */

import type {
  AlignDto,
  AnalysisResultDto,
  AnalyzeRequestDto,
  DiscoveryDto,
  GridDto,
  LakeTableDto,
  MappingDto,
  PreviewDto,
  ServiceErrorDto,
  SessionDto,
} from './types';

export class ServiceError extends Error {
  readonly code: string;
  readonly stage: string | null;
  readonly status: number;

  constructor(status: number, body: ServiceErrorDto) {
    super(body.message);
    this.code = body.code;
    this.stage = body.stage;
    this.status = status;
  }
}

export const PREVIEW_ROW_CAP = 50;

type FetchLike = typeof fetch;

export class ApiClient {
  readonly log: string[] = [];
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? fetch.bind(globalThis);
  }

  private record(method: string, path: string): void {
    this.log.push(`${method} ${path.replace(/\/sessions\/[^/]+/, '/sessions/{id}')}`);
  }

  private async request<T>(method: string, path: string, init?: RequestInit): Promise<T> {
    this.record(method, path.split('?')[0]);
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, { method, ...init });
    const text = await response.text();
    const body = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ServiceError(response.status, body as ServiceErrorDto);
    }
    return body as T;
  }

  private json<T>(method: string, path: string, payload: unknown): Promise<T> {
    return this.request<T>(method, path, {
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  createSession(): Promise<SessionDto> {
    return this.request('POST', '/sessions');
  }

  getSession(id: string): Promise<SessionDto> {
    return this.request('GET', `/sessions/${id}`);
  }

  uploadQueryCsv(id: string, csvText: string): Promise<SessionDto> {
    return this.request('POST', `/sessions/${id}/query-table`, {
      headers: { 'content-type': 'text/csv' },
      body: csvText,
    });
  }

  generateQuery(id: string, prompt: string, rows: number, cols: number): Promise<SessionDto> {
    return this.json('POST', `/sessions/${id}/query-table`, { prompt, rows, cols });
  }

  discover(
    id: string,
    method: string,
    k: number,
    queryColumn: string | null,
    threshold: number | null = null,
  ): Promise<DiscoveryDto> {
    return this.json('POST', `/sessions/${id}/discover`, {
      method,
      k,
      query_column: queryColumn,
      threshold,
    });
  }

  setSelection(id: string, tableIds: string[]): Promise<SessionDto> {
    return this.json('POST', `/sessions/${id}/selection`, { table_ids: tableIds });
  }

  align(id: string, tau: number | null): Promise<AlignDto> {
    return this.json('POST', `/sessions/${id}/align`, tau === null ? {} : { tau });
  }

  putMapping(id: string, mapping: MappingDto): Promise<AlignDto> {
    return this.json('PUT', `/sessions/${id}/mapping`, { mapping });
  }

  integrate(id: string, operator: string): Promise<GridDto> {
    return this.json('POST', `/sessions/${id}/integrate`, { operator });
  }

  analyze(id: string, spec: AnalyzeRequestDto): Promise<AnalysisResultDto> {
    return this.json('POST', `/sessions/${id}/analyze`, spec);
  }

  methods(): Promise<{ methods: string[] }> {
    return this.request('GET', '/methods');
  }

  operators(): Promise<{ operators: string[] }> {
    return this.request('GET', '/operators');
  }

  lakeTables(): Promise<{ tables: LakeTableDto[] }> {
    return this.request('GET', '/lake/tables');
  }

  /** Previews are capped client-side; the server pages beyond that. */
  preview(tableId: string, rows: number): Promise<PreviewDto> {
    const capped = Math.min(rows, PREVIEW_ROW_CAP);
    return this.request('GET', `/lake/tables/${encodeURIComponent(tableId)}/preview?rows=${capped}`);
  }
}
