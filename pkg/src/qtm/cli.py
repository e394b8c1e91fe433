"""Command-line front end: validate / complete / run / transform /
oracle-run / compare.

All structured output is JSON on stdout (sorted keys, fixed indent), so
identical inputs and flags produce byte-identical bytes.  Exit codes:
0 success or check passed, 1 check failed, 2 usage or input error,
3 resource cap hit.
"""

import argparse
import json
import sys

from .config import TOL_WELLFORMED, TOL_ACCEPT, load_config
from .machine import (MachineError, parse_machine, print_machine,
                      flatten_labels, format_amplitude)
from .wellformed import validate
from .completion import complete
from .simulate import (SimulationError, run, measure, AcceptancePredicate)
from . import transforms
from .oracle import (OracleError, OracleFamily, promote, flatten_oracle,
                     oracle_run, query_count_audit, query_length_audit,
                     normalize_query_count, pad_query_length,
                     merge_query_tapes)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


def emit(obj):
	sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_machine(path):
	with open(path) as f:
		return parse_machine(f.read())


def parse_words(s):
	"""Comma-separated per-tape input words; '' is an all-blank tape."""
	return tuple("" if w == "-" else w for w in s.split(","))


def parse_accept(spec):
	"""bit:TAPE[:CELL]  or  state:q1,q2,..."""
	kind, _, rest = spec.partition(":")
	if kind == "bit":
		parts = rest.split(":")
		tape = int(parts[0])
		cell = int(parts[1]) if len(parts) > 1 else 0
		return AcceptancePredicate.output_bit(tape, ("1",), cell)
	if kind == "state":
		return AcceptancePredicate.final_states(rest.split(","))
	raise MachineError("bad acceptance spec %r (want bit:TAPE[:CELL] or state:q,..)" % spec)


def load_oracle(path):
	"""oracle.json: {"tapes": m, "sets": [["0", "11"], []]}"""
	with open(path) as f:
		data = json.load(f)
	sets = data["sets"]
	if len(sets) != data["tapes"]:
		raise OracleError("oracle file lists %d sets for %d tapes"
		                  % (len(sets), data["tapes"]))
	return OracleFamily.from_sets(sets), sets


def tol_from(args, key, default):
	"""Flag beats config file beats package default."""
	if getattr(args, "tol", None) is not None:
		return args.tol
	if args.config:
		cfg = load_config(args.config)
		if key in cfg:
			return cfg[key]
	return default


def superposition_json(phi):
	out = []
	for c, a in phi.sorted_items():
		out.append({
			"amplitude": format_amplitude(a),
			"state": str(c.state),
			"heads": list(c.heads),
			"tapes": [sorted([cell, str(s)] for cell, s in t.items())
			          for t in c.tapes],
		})
	return out


# ------------------------------------------------------------------ commands

def cmd_validate(args):
	m = load_machine(args.machine)
	tol = tol_from(args, "tol_wellformed", TOL_WELLFORMED)
	rep = validate(m, tol=tol)
	emit(rep.as_dict())
	return EXIT_OK if rep.overall else EXIT_FAIL


def cmd_complete(args):
	m = load_machine(args.machine)
	tol = tol_from(args, "tol_wellformed", TOL_WELLFORMED)
	m2, trace = complete(m, tol=tol)
	text = print_machine(flatten_labels(m2))
	if args.output:
		with open(args.output, "w") as f:
			f.write(text)
	emit({"rulesIn": len(m.delta), "rulesOut": len(m2.delta),
	      "trace": trace.as_dict(), "output": args.output})
	if not args.output:
		sys.stdout.write(text)
	return EXIT_OK


def cmd_run(args):
	m = load_machine(args.machine)
	res = run(m, parse_words(args.input), max_steps=args.steps)
	report = {"halted": res.halted, "runningTime": res.runningTime,
	          "norm": res.finalSuperposition.norm(),
	          "final": superposition_json(res.finalSuperposition)}
	rc = EXIT_OK
	if args.accept:
		pred = parse_accept(args.accept)
		report["mu"] = measure(res.finalSuperposition, pred, m.blanks)
	if not res.halted:
		rc = EXIT_CAP
	emit(report)
	return rc


_PLAIN_PASSES = {
	"synchronize": lambda m, args: transforms.synchronize(m),
	"concurrentize": lambda m, args: transforms.concurrentize(m),
	"dynamize": lambda m, args: transforms.dynamize(m),
	"reverse": lambda m, args: transforms.reverse(m),
	"square": lambda m, args: transforms.square(m),
	"time-gate": lambda m, args: transforms.time_gate(m, need_T(args)),
}

_ORACLE_PASSES = {
	"count": normalize_query_count,
	"pad": pad_query_length,
	"merge": merge_query_tapes,
}


def need_T(args):
	if args.T is None:
		raise MachineError("this pass needs --T")
	return args.T


def rewrite_sets(name, sets, T, m_tapes):
	"""Finite-set image of the pass's oracle rewriter."""
	if name == "count":
		return {"tapes": 2, "sets": [sets[0], sets[0]]}
	if name == "pad":
		out = sorted("".join(y) + "0" + "1" * (T - len(y) - 2)
		             for y in sets[0] if len(y) <= T - 3)
		return {"tapes": 1, "sets": [out]}
	if name == "merge":
		out = []
		for i, words in enumerate(sets, 1):
			sfx = "0" * i + "1" * (m_tapes - i)
			out.extend("".join(y) + sfx for y in words)
		return {"tapes": 1, "sets": [sorted(out)]}
	raise MachineError("no oracle rewrite for pass %r" % name)


def cmd_transform(args):
	m = load_machine(args.machine)
	name = args.transform
	oracle_out = None
	if name in _PLAIN_PASSES:
		out = _PLAIN_PASSES[name](m, args)
		m2, cert = out[0], out[1]
		m2 = flatten_labels(m2)
	elif name == "conservative":
		T, trace_words = None, None
		if args.time_table:
			with open(args.time_table) as f:
				table = json.load(f)
			T = table["T"]
			trace_words = [tuple(w) for w in table.get("words", [])]
		elif args.T is not None:
			T = args.T
		m2, cert, _stages = transforms.to_conservative(
			m, T=T, trace_words=trace_words or None)
		m2 = flatten_labels(m2)
	elif name in _ORACLE_PASSES:
		om = promote(m)
		T = need_T(args)
		m2, cert, _rw = _ORACLE_PASSES[name](om, T)
		if args.oracle:
			_family, sets = load_oracle(args.oracle)
			oracle_out = rewrite_sets(name, sets, T, om.query_tapes)
		m2 = flatten_oracle(m2)
	else:
		raise MachineError("unknown transform %r" % name)
	text = print_machine(m2)
	report = {"certificate": cert.as_dict(), "output": args.output}
	if args.output:
		with open(args.output, "w") as f:
			f.write(text)
		with open(args.output + ".cert.json", "w") as f:
			f.write(json.dumps(cert.as_dict(), sort_keys=True, indent=2) + "\n")
		if oracle_out is not None:
			with open(args.output + ".oracle.json", "w") as f:
				f.write(json.dumps(oracle_out, sort_keys=True, indent=2) + "\n")
			report["oracleOutput"] = args.output + ".oracle.json"
	emit(report)
	if not args.output:
		sys.stdout.write(text)
	return EXIT_OK


def cmd_oracle_run(args):
	m = promote(load_machine(args.machine))
	family, _sets = load_oracle(args.oracle)
	words = parse_words(args.input)
	res, events = oracle_run(m, family, words, args.steps)
	report = {"halted": res.halted, "runningTime": res.runningTime,
	          "norm": res.finalSuperposition.norm(),
	          "queries": [{"tape": e.tape, "word": "".join(e.word),
	                       "answer": e.answer} for e in events],
	          "final": superposition_json(res.finalSuperposition)}
	rc = EXIT_OK if res.halted else EXIT_CAP
	if args.audit and res.halted:
		report["queryCountsPerPath"] = sorted(
			query_count_audit(m, family, words, args.steps))
		report["queryLengthsPerPath"] = sorted(
			query_length_audit(m, family, words, args.steps))
	if args.accept:
		pred = parse_accept(args.accept)
		report["mu"] = measure(res.finalSuperposition, pred, m.blanks)
	emit(report)
	return rc


def cmd_compare(args):
	ma = load_machine(args.machine_a)
	mb = load_machine(args.machine_b)
	tol = tol_from(args, "tol_accept", TOL_ACCEPT)
	pred_a = parse_accept(args.accept)
	pred_b = parse_accept(args.accept_b) if args.accept_b else pred_a
	inputs_a = [parse_words(s) for s in args.input]
	inputs_b = [parse_words(s) for s in args.input_b] if args.input_b else inputs_a
	if len(inputs_b) != len(inputs_a):
		raise MachineError("--input-b count must match --input count")
	rows, worst = [], 0.0
	for wa, wb in zip(inputs_a, inputs_b):
		ra = run(ma, wa, max_steps=args.steps)
		rb = run(mb, wb, max_steps=args.steps)
		if not (ra.halted and rb.halted):
			raise SimulationError("machine did not halt within %d steps" % args.steps)
		mu_a = measure(ra.finalSuperposition, pred_a, ma.blanks)
		mu_b = measure(rb.finalSuperposition, pred_b, mb.blanks)
		diff = abs(mu_a - mu_b)
		worst = max(worst, diff)
		rows.append({"input": ",".join(wa), "muA": mu_a, "muB": mu_b,
		             "diff": diff, "runtimeA": ra.runningTime,
		             "runtimeB": rb.runningTime})
	verdict = "equal" if worst <= tol else "unequal"
	emit({"rows": rows, "maxDiff": worst, "tol": tol, "verdict": verdict})
	return EXIT_OK if verdict == "equal" else EXIT_FAIL


# --------------------------------------------------------------- entry point

def build_parser():
	p = argparse.ArgumentParser(prog="qtm",
	                            description="multi-tape quantum Turing machine toolkit")
	p.add_argument("--config", help="key=value config file for tolerances")
	p.add_argument("--seed", type=int, default=0, help="generator seed")
	sub = p.add_subparsers(dest="command", required=True)

	sp = sub.add_parser("validate", help="well-formedness check")
	sp.add_argument("machine")
	sp.add_argument("--tol", type=float)
	sp.set_defaults(fn=cmd_validate)

	sp = sub.add_parser("complete", help="extend a partial machine to a total one")
	sp.add_argument("machine")
	sp.add_argument("-o", "--output")
	sp.add_argument("--tol", type=float)
	sp.set_defaults(fn=cmd_complete)

	sp = sub.add_parser("run", help="simulate on an input")
	sp.add_argument("machine")
	sp.add_argument("--input", required=True,
	                help="comma-separated per-tape words ('' = blank tape)")
	sp.add_argument("--steps", type=int, required=True)
	sp.add_argument("--accept", help="bit:TAPE[:CELL] or state:q1,q2")
	sp.set_defaults(fn=cmd_run)

	sp = sub.add_parser("transform", help="apply a compiler pass")
	sp.add_argument("transform", choices=sorted(_PLAIN_PASSES)
	                + ["conservative"] + sorted(_ORACLE_PASSES))
	sp.add_argument("machine")
	sp.add_argument("-T", type=int, help="declared exact running time")
	sp.add_argument("--time-table", help="JSON {T, words} for the conservative pass")
	sp.add_argument("--oracle", help="oracle.json rewritten alongside (oracle passes)")
	sp.add_argument("-o", "--output")
	sp.set_defaults(fn=cmd_transform)

	sp = sub.add_parser("oracle-run", help="simulate a relativized machine")
	sp.add_argument("machine")
	sp.add_argument("--oracle", required=True)
	sp.add_argument("--input", required=True)
	sp.add_argument("--steps", type=int, required=True)
	sp.add_argument("--accept")
	sp.add_argument("--audit", action="store_true",
	                help="include per-path query count/length audits")
	sp.set_defaults(fn=cmd_oracle_run)

	sp = sub.add_parser("compare", help="acceptance-probability comparison")
	sp.add_argument("machine_a")
	sp.add_argument("machine_b")
	sp.add_argument("--input", action="append", required=True)
	sp.add_argument("--input-b", action="append",
	                help="B-side inputs when conventions differ (e.g. 1^T padding)")
	sp.add_argument("--accept", required=True)
	sp.add_argument("--accept-b")
	sp.add_argument("--steps", type=int, required=True)
	sp.add_argument("--tol", type=float)
	sp.set_defaults(fn=cmd_compare)
	return p


def main(argv=None):
	args = build_parser().parse_args(argv)
	try:
		return args.fn(args)
	except OracleError as e:
		if "path explosion" in str(e):
			sys.stderr.write("error: %s\n" % e)
			return EXIT_CAP
		sys.stderr.write("error: %s\n" % e)
		return EXIT_USAGE
	except SimulationError as e:
		msg = str(e)
		sys.stderr.write("error: %s\n" % msg)
		if "exceeds cap" in msg or "did not halt" in msg:
			return EXIT_CAP
		return EXIT_FAIL
	except (MachineError, OSError, KeyError, ValueError, json.JSONDecodeError) as e:
		sys.stderr.write("error: %s\n" % e)
		return EXIT_USAGE


if __name__ == "__main__":
	sys.exit(main())
