/**
 * Display models. All values come from the service untouched; this module
 * only decides how to present them (null markers, tooltips, bar widths).
 */

import type { CellDto, DiscoveryEntryDto, GridDto, GridRowDto } from './types';

export interface CellView {
  /** text shown in the cell; empty for nulls (the marker carries the kind) */
  text: string;
  /** css class: '' | 'null-missing' | 'null-produced' */
  kindClass: string;
  /** hollow marker for source-missing nulls, filled for integration-produced */
  marker: string;
  tooltip: string;
}

export function cellView(cell: CellDto): CellView {
  if (cell.kind === 'missing') {
    return {
      text: '',
      kindClass: 'null-missing',
      marker: '○', // hollow circle
      tooltip: 'missing null: empty in the source data',
    };
  }
  if (cell.kind === 'produced') {
    return {
      text: '',
      kindClass: 'null-produced',
      marker: '●', // filled circle
      tooltip: 'produced null: created by integration',
    };
  }
  return { text: cell.value ?? '', kindClass: '', marker: '', tooltip: '' };
}

export function lineageText(row: GridRowDto): string {
  if (!row.origins.length) return 'no recorded origins';
  return row.origins.map(([table, index]) => `${table} row ${index + 1}`).join(', ');
}

export interface GridView {
  operator: string;
  columns: string[];
  rows: { cells: CellView[]; lineage: string }[];
}

export function buildGrid(grid: GridDto): GridView {
  return {
    operator: grid.operator,
    columns: grid.columns,
    rows: grid.rows.map((row) => ({
      cells: row.cells.map(cellView),
      lineage: lineageText(row),
    })),
  };
}

/** Width of a ranked-result score bar, in percent. */
export function scoreBarWidth(entry: DiscoveryEntryDto): number {
  const clamped = Math.max(0, Math.min(1, entry.score));
  return Math.round(clamped * 100);
}

export function formatScore(score: number): string {
  return score.toFixed(3);
}
