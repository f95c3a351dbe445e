"""Command-line front door over the same engine as the service.

Every subcommand prints machine-readable JSON to stdout and diagnostics to
stderr. Exit codes: 0 success, 1 caller error, 2 engine error. ``--pretty``
switches table-shaped results to an aligned text rendering.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import discovery as disc
from . import integrate as integ
from .align import assign_integration_ids, mapping_from_json_obj
from .analyze import AnalysisSpec, run_analysis
from .config import load_config
from .errors import EngineError, InputError
from .jsonio import dumps_canonical, read_json, write_json
from .tables import ingest_lake, load_table, table_to_csv_text
from .textgen import generate_query_table


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError("usage", f"{self.prog}: {message}")


def build_parser() -> _Parser:
    parser = _Parser(prog="lakefuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="ingest a lake and build the joinable-search index")
    p.add_argument("--lake", required=True)
    p.add_argument("--k", type=int, default=disc.DEFAULT_K)
    p.add_argument("--partitions", type=int, default=disc.DEFAULT_PARTITIONS)
    p.add_argument("--threshold", type=float, default=disc.DEFAULT_THRESHOLD)
    p.add_argument("--seed", type=int, default=disc.DEFAULT_SEED)

    p = sub.add_parser("discover", help="rank lake tables against a query table")
    p.add_argument("--lake", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--column")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--threshold", type=float)
    p.add_argument("--seed", type=int, default=disc.DEFAULT_SEED)
    p.add_argument("--out")

    p = sub.add_parser("align", help="assign integration ids to a set of CSVs")
    p.add_argument("--set", dest="set_dir", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--out")

    p = sub.add_parser("integrate", help="integrate a set of tables")
    p.add_argument("--set", dest="set_dir")
    p.add_argument("--from-results", dest="from_results")
    p.add_argument("--select")
    p.add_argument("--operator", default="fd")
    p.add_argument("--mapping")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--order")
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="run an analysis spec over an exported table")
    p.add_argument("--table", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out")

    p = sub.add_parser("gen-query", help="generate a query table from a prompt")
    p.add_argument("--prompt", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--provider", default="stub")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)

    parser.add_argument("--pretty", action="store_true", help="human-readable tables")
    return parser


def _emit(obj: dict, pretty: bool = False) -> None:
    if pretty and "columns" in obj and "rows" in obj:
        widths = [len(str(c)) for c in obj["columns"]]
        rows = [[("" if v is None else str(v)) for v in row] for row in obj["rows"]]
        for row in rows:
            widths = [max(w, len(v)) for w, v in zip(widths, row)]
        line = "  ".join(str(c).ljust(w) for c, w in zip(obj["columns"], widths))
        sys.stdout.write(line.rstrip() + "\n")
        for row in rows:
            sys.stdout.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")
    else:
        sys.stdout.write(dumps_canonical(obj))


def _load_set(args) -> tuple[list, str | None]:
    """Integration set from --set DIR or --from-results results.json [--select]."""
    if args.set_dir:
        lake = ingest_lake(args.set_dir)
        tables = [lake.load(tid) for tid in lake.table_ids()]
        if not tables:
            raise InputError("empty_set", f"no CSV files under {args.set_dir}")
        return tables, None
    if args.from_results:
        obj = read_json(Path(args.from_results))
        lake_root = obj.get("lake_root")
        if not lake_root:
            raise InputError("bad_results", "results file lacks 'lake_root'")
        lake = ingest_lake(lake_root)
        query_path = obj.get("query", {}).get("path")
        if not query_path:
            raise InputError("bad_results", "results file lacks the query path")
        query = load_table(query_path)
        result = disc.DiscoveryResult(
            method=obj["method"],
            query_table_id=obj["query"]["table_id"],
            query_column=obj["query"].get("column"),
            k=obj["k"],
            entries=tuple((r["table_id"], r["score"]) for r in obj["results"]),
            threshold=obj.get("threshold"),
        )
        selection = args.select.split(",") if args.select else None
        return disc.assemble_integration_set(lake, [result], query, selection), None
    raise InputError("usage", "integrate needs --set DIR or --from-results FILE")


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InputError as exc:
        sys.stderr.write(dumps_canonical(exc.to_json_obj()))
        return 1

    try:
        if args.command == "index":
            lake = ingest_lake(args.lake)
            lake.write_manifest()
            index = disc.build_join_index(
                lake,
                partitions=args.partitions,
                threshold=args.threshold,
                k=args.k,
                seed=args.seed,
            )
            disc.save_join_index(index, lake.root)
            _emit(
                {
                    "lake": str(lake.root),
                    "tables": len(lake.entries),
                    "columns": index.column_count(),
                    "warnings": lake.warnings,
                    "index": index.params_obj(),
                }
            )
        elif args.command == "discover":
            lake_root = Path(args.lake)
            if not lake_root.is_dir():
                raise InputError("unreadable_file", f"lake root {lake_root} is not a directory")
            from .tables import load_lake

            lake = load_lake(lake_root)
            query = load_table(args.query)
            kwargs = {}
            if args.method == "joinable-lsh":
                kwargs = {"threshold": args.threshold, "seed": args.seed}
            result = disc.discover_with(
                args.method, lake, query, query_column=args.column, k=args.k, **kwargs
            )
            obj = result.to_json_obj()
            obj["lake_root"] = str(lake_root)
            obj["query"]["path"] = str(Path(args.query))
            if args.out:
                write_json(Path(args.out), obj)
            _emit(obj)
        elif args.command == "align":
            tables, _ = _load_set(args)
            mapping, warnings = assign_integration_ids(tables, args.tau)
            obj = mapping.to_json_obj()
            if args.out:
                write_json(Path(args.out), obj)
            _emit({"mapping": obj, "warnings": warnings})
        elif args.command == "integrate":
            tables, _ = _load_set(args)
            if args.mapping:
                mapping = mapping_from_json_obj(read_json(Path(args.mapping)), tables)
            else:
                mapping, _warn = assign_integration_ids(tables, args.tau)
            if args.operator == "outer-join" and args.order:
                result = integ.outer_join_integrate(tables, mapping, args.order.split(","))
            else:
                result = integ.integrate_with(args.operator, tables, mapping)
            integ.save_integrated(result, Path(args.out))
            _emit(
                {
                    "operator": result.operator,
                    "columns": list(result.columns),
                    "rows": len(result.rows),
                    "out": str(Path(args.out)),
                },
                pretty=False,
            )
        elif args.command == "analyze":
            table = integ.load_integrated(Path(args.table))
            spec = AnalysisSpec.from_json_obj(read_json(Path(args.spec)))
            payload = run_analysis(table, spec)
            if args.out:
                out_path = Path(args.out)
                write_json(out_path, payload)
                if spec.kind == "aggregate":
                    import csv as _csv
                    import io as _io

                    buf = _io.StringIO()
                    writer = _csv.writer(buf, lineterminator="\n")
                    writer.writerow(payload["result"]["columns"])
                    for row in payload["result"]["rows"]:
                        writer.writerow(["" if v is None else v for v in row])
                    from .jsonio import write_text

                    write_text(out_path.with_suffix(".csv"), buf.getvalue())
            if args.pretty and spec.kind == "aggregate":
                _emit(payload["result"], pretty=True)
            else:
                _emit(payload)
        elif args.command == "gen-query":
            table = generate_query_table(args.prompt, args.rows, args.cols, args.provider)
            obj = {
                "columns": list(table.columns),
                "rows": [["" if c.is_null else c.value for c in row] for row in table.rows],
                "csv": table_to_csv_text(table),
            }
            _emit(obj, pretty=args.pretty)
        elif args.command == "serve":
            from .service import serve

            serve(load_config(args.config))
        else:  # pragma: no cover - argparse enforces the choices
            raise InputError("usage", f"unknown command {args.command!r}")
    except InputError as exc:
        sys.stderr.write(dumps_canonical(exc.to_json_obj()))
        return 1
    except EngineError as exc:
        sys.stderr.write(dumps_canonical(exc.to_json_obj()))
        return 2
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
