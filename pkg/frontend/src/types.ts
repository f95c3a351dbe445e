/** Wire types mirrored from the service's JSON responses. */

export type NullKind = 'none' | 'missing' | 'produced';

export interface CellDto {
  value: string | null;
  kind: NullKind;
}

export interface GridRowDto {
  cells: CellDto[];
  origins: [string, number][];
}

export interface GridDto {
  operator: string;
  columns: string[];
  rows: GridRowDto[];
}

export interface DiscoveryEntryDto {
  table_id: string;
  score: number;
}

export interface DiscoveryDto {
  method: string;
  query: { table_id: string; column: string | null };
  k: number;
  threshold: number | null;
  results: DiscoveryEntryDto[];
  hint?: string;
}

/** integration id -> [table_id, column] pairs */
export type MappingDto = Record<string, [string, string][]>;

export interface AlignDto {
  mapping: MappingDto;
  warnings: string[];
  integration_set?: string[];
}

export interface QueryMetaDto {
  table_id: string;
  columns: string[];
  rows: number;
  source: string;
}

export interface SessionDto {
  session_id: string;
  stage: string;
  stages_done: string[];
  query?: QueryMetaDto;
  discoveries: Record<string, DiscoveryDto>;
  selection?: string[];
  mapping?: MappingDto;
  mapping_warnings?: string[];
  integration_grids: Record<string, GridDto>;
  analyses: AnalysisResultDto[];
}

export interface LakeTableDto {
  table_id: string;
  rows: number;
  cols: number;
}

export interface PreviewDto {
  table_id: string;
  columns: string[];
  total_rows: number;
  rows: CellDto[][];
}

export interface AnalyzeRequestDto {
  kind: 'aggregate' | 'correlate' | 'resolve';
  group_by?: string[];
  measure?: string;
  func?: string;
  x?: string;
  y?: string;
  threshold?: number;
  operator?: string;
}

export interface AnalysisResultDto {
  spec: Record<string, unknown>;
  operator?: string;
  result: {
    columns?: string[];
    rows?: unknown[][];
    coefficient?: number;
    clusters?: number[][];
    x?: string;
    y?: string;
    threshold?: number;
  };
}

export interface ServiceErrorDto {
  code: string;
  message: string;
  stage: string | null;
}
