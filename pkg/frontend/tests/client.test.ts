import { describe, expect, it } from 'vitest';

import { ApiClient, PREVIEW_ROW_CAP, ServiceError } from '../src/client';

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | undefined;
}

function fakeFetch(responses: Record<string, unknown>, recorded: Recorded[]): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? 'GET';
    recorded.push({
      url,
      method,
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body as string | undefined,
    });
    const key = `${method} ${new URL(url).pathname}`;
    if (!(key in responses)) {
      return new Response(
        JSON.stringify({ code: 'unknown', message: `no stub for ${key}`, stage: null }),
        { status: 404 },
      );
    }
    return new Response(JSON.stringify(responses[key]), { status: 200 });
  }) as typeof fetch;
}

describe('ApiClient', () => {
  it('hits the documented paths and normalizes the log', async () => {
    const recorded: Recorded[] = [];
    const client = new ApiClient(
      'http://svc',
      fakeFetch(
        {
          'POST /sessions': { session_id: 'abc123' },
          'GET /methods': { methods: ['unionable-match'] },
          'POST /sessions/abc123/discover': { results: [] },
          'PUT /sessions/abc123/mapping': { mapping: {}, warnings: [] },
          'GET /lake/tables/t1.csv/preview': { rows: [] },
        },
        recorded,
      ),
    );
    const session = await client.createSession();
    await client.methods();
    await client.discover(session.session_id, 'unionable-match', 5, 'City');
    await client.putMapping(session.session_id, { I0: [['t', 'c']] });
    await client.preview('t1.csv', 500);

    expect(client.log).toEqual([
      'POST /sessions',
      'GET /methods',
      'POST /sessions/{id}/discover',
      'PUT /sessions/{id}/mapping',
      'GET /lake/tables/t1.csv/preview',
    ]);

    const discover = recorded[2];
    expect(JSON.parse(discover.body!)).toEqual({
      method: 'unionable-match',
      k: 5,
      query_column: 'City',
      threshold: null,
    });
    const preview = recorded[4];
    expect(preview.url).toContain(`rows=${PREVIEW_ROW_CAP}`);
  });

  it('sends csv uploads with a text/csv content type', async () => {
    const recorded: Recorded[] = [];
    const client = new ApiClient(
      'http://svc',
      fakeFetch({ 'POST /sessions/s/query-table': { session_id: 's' } }, recorded),
    );
    await client.uploadQueryCsv('s', 'a,b\n1,2\n');
    expect(recorded[0].headers['content-type']).toBe('text/csv');
    expect(recorded[0].body).toBe('a,b\n1,2\n');
  });

  it('wraps service errors with code and stage', async () => {
    const client = new ApiClient(
      'http://svc',
      (async () =>
        new Response(
          JSON.stringify({ code: 'stage_order', message: 'align first', stage: 'integrate' }),
          { status: 409 },
        )) as typeof fetch,
    );
    const err = await client.integrate('s', 'fd').catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe('stage_order');
    expect(err.stage).toBe('integrate');
    expect(err.status).toBe(409);
  });
});
