import { describe, expect, it } from 'vitest';

import { buildGrid, cellView, formatScore, lineageText, scoreBarWidth } from '../src/grid';
import type { GridDto } from '../src/types';

describe('cellView', () => {
  it('renders plain values without markers', () => {
    const view = cellView({ value: 'Boston', kind: 'none' });
    expect(view.text).toBe('Boston');
    expect(view.marker).toBe('');
    expect(view.kindClass).toBe('');
  });

  it('renders missing nulls with a hollow marker and naming tooltip', () => {
    const view = cellView({ value: null, kind: 'missing' });
    expect(view.marker).toBe('○');
    expect(view.kindClass).toBe('null-missing');
    expect(view.tooltip).toContain('missing');
  });

  it('renders produced nulls with a filled marker and naming tooltip', () => {
    const view = cellView({ value: null, kind: 'produced' });
    expect(view.marker).toBe('●');
    expect(view.kindClass).toBe('null-produced');
    expect(view.tooltip).toContain('produced');
  });
});

describe('lineage', () => {
  it('names contributing source rows 1-based', () => {
    expect(
      lineageText({ cells: [], origins: [['t4.csv', 0], ['t5.csv', 2]] }),
    ).toBe('t4.csv row 1, t5.csv row 3');
    expect(lineageText({ cells: [], origins: [] })).toBe('no recorded origins');
  });
});

describe('buildGrid', () => {
  it('maps every cell and carries the operator name', () => {
    const grid: GridDto = {
      operator: 'fd',
      columns: ['I0', 'I1'],
      rows: [
        {
          cells: [
            { value: 'x', kind: 'none' },
            { value: null, kind: 'produced' },
          ],
          origins: [['t', 0]],
        },
      ],
    };
    const view = buildGrid(grid);
    expect(view.operator).toBe('fd');
    expect(view.rows[0].cells[1].kindClass).toBe('null-produced');
    expect(view.rows[0].lineage).toBe('t row 1');
  });
});

describe('score display', () => {
  it('maps scores to clamped bar widths', () => {
    expect(scoreBarWidth({ table_id: 't', score: 0.5 })).toBe(50);
    expect(scoreBarWidth({ table_id: 't', score: 1.7 })).toBe(100);
    expect(scoreBarWidth({ table_id: 't', score: -0.2 })).toBe(0);
  });

  it('formats scores with three decimals', () => {
    expect(formatScore(0.58102)).toBe('0.581');
  });
});
