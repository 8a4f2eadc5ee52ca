"""Command-line clients for every protocol role, plus serving, benchmarking
and fault injection.  Each action wraps exactly one library or HTTP call
and prints one JSON object; failures print an error object and exit 1.
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys
from pathlib import Path

import click

from .authority import Cta, KeyBundle
from .bench import PAPER_SIZES_KB, run_bench, rows_to_csv
from .codec import table_rows
from .config import load_config
from .errors import CredsecError
from .httpapi import ApiError, ServiceClient, create_cms_app, create_cta_app
from .ledger import Ledger
from .m2fe import envelope_parse, envelope_serialize, m2fe_decrypt, m2fe_encrypt
from .service import build_stack
from .tamper import tamper_ledger, tamper_lds

DEFAULT_ENDPOINT = "http://127.0.0.1:8470"


def _echo_json(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _guard(fn):
    """Uniform failure shape: error JSON on stdout, exit status 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (CredsecError, ApiError, OSError, ValueError, KeyError) as err:
            _echo_json({"b": 0, "error": type(err).__name__, "detail": str(err)})
            sys.exit(1)

    return wrapper


def _client(endpoint: str) -> ServiceClient:
    return ServiceClient(endpoint)


def _read_plaintext(path: str) -> str:
    # trailing newlines are editor artifacts, not credential content
    return Path(path).read_text(encoding="utf-8").rstrip("\r\n")


def _load_bundle(path: str) -> KeyBundle:
    return KeyBundle.from_json(json.loads(Path(path).read_text()))


_endpoint_opt = click.option("--endpoint", default=DEFAULT_ENDPOINT, show_default=True,
                             help="Base URL of the service.")
_config_opt = click.option("--config", "config_path", default=None,
                           type=click.Path(exists=True, dir_okay=False),
                           help="TOML or JSON config file.")
_token_opt = click.option("--token", envvar="CREDSEC_TOKEN", required=True,
                          help="Session token (or env CREDSEC_TOKEN).")


@click.group()
@click.version_option(package_name="credsec")
def main():
    """Credential management with encrypted envelopes, a tamper-evident
    ledger, and client-side verification and recovery."""


# --- servers -----------------------------------------------------------------

@main.group()
def cta():
    """Authority-side commands."""


@cta.command("serve")
@_config_opt
@click.option("--check", is_flag=True, help="Build everything, print the resolved "
              "settings, exit without binding.")
@_guard
def cta_serve(config_path, check):
    """Run the authority service on its own port."""
    cfg = load_config(config_path)
    authority = Cta(bits=cfg.rsa_bits, K=cfg.dummy_budget,
                    exponent_mode=cfg.exponent_mode, chunk_digits=cfg.chunk_digits)
    app = create_cta_app(authority)
    if check:
        _echo_json({"b": 1, "role": "cta", "host": cfg.host, "port": cfg.cta_port,
                    "rsa_bits": cfg.rsa_bits, "S": authority.S, "T": authority.T})
        return
    import uvicorn

    uvicorn.run(app, host=cfg.host, port=cfg.cta_port)


@main.group()
def cms():
    """Management-service commands."""


@cms.command("serve")
@_config_opt
@click.option("--check", is_flag=True, help="Build everything, print the resolved "
              "settings, exit without binding.")
@_guard
def cms_serve(config_path, check):
    """Run the management service.

    Without cta_endpoint in the config this embeds an authority and exposes
    its routes from the same port, which is the single-process demo setup.
    """
    cfg = load_config(config_path)
    stack = build_stack(cfg)
    app = create_cms_app(stack.cms, stack.cta)
    if check:
        _echo_json({"b": 1, "role": "cms", "host": cfg.host, "port": cfg.cms_port,
                    "data_dir": str(cfg.data_dir), "embedded_cta": stack.cta is not None})
        return
    import uvicorn

    uvicorn.run(app, host=cfg.host, port=cfg.cms_port)


# --- instructor --------------------------------------------------------------

@main.group()
def ins():
    """Instructor-side commands."""


@ins.command("register-cta")
@_endpoint_opt
@click.option("--email", required=True)
@click.option("--id", "ins_id", required=True)
@_guard
def ins_register_cta(endpoint, email, ins_id):
    """Register the identity with the authority; prints the issued nonce."""
    nonce = _client(endpoint).cta_register_instructor(email, ins_id)
    _echo_json({"b": 1, "nonce": nonce})


@ins.command("register-cms")
@_endpoint_opt
@click.option("--email", required=True)
@click.option("--password", required=True)
@click.option("--id", "ins_id", required=True)
@click.option("--nonce", required=True)
@_guard
def ins_register_cms(endpoint, email, password, ins_id, nonce):
    """Create the service account using the authority-issued nonce."""
    _echo_json(_client(endpoint).ins_register(email, password, ins_id, nonce))


@ins.command("login")
@_endpoint_opt
@click.option("--email", required=True)
@click.option("--password", required=True)
@click.option("--nonce", required=True)
@_guard
def ins_login(endpoint, email, password, nonce):
    token = _client(endpoint).ins_login(email, password, nonce)
    _echo_json({"b": 1, "token": token})


@ins.command("fetch-key")
@_endpoint_opt
@click.option("--roll", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_guard
def ins_fetch_key(endpoint, roll, out):
    """Fetch a student's public bundle for encrypting their credential."""
    bundle = _client(endpoint).fetch_encryption_key(roll)
    Path(out).write_text(json.dumps(bundle.to_json(), indent=2))
    _echo_json({"b": 1, "key_file": out})


@ins.command("encrypt")
@click.option("--key-file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_guard
def ins_encrypt(key_file, in_path, out):
    """Encrypt plaintext from a file into an envelope file."""
    bundle = _load_bundle(key_file)
    text = _read_plaintext(in_path)
    env, h_c = m2fe_encrypt(text, bundle.e, bundle.N, bundle.dk, bundle.Y,
                            bundle.S, bundle.T, k=bundle.k)
    blob = envelope_serialize(env)
    Path(out).write_bytes(blob)
    _echo_json({"b": 1, "h_c": h_c.hex(), "bytes": len(blob)})


@ins.command("upload")
@_endpoint_opt
@_token_opt
@click.option("--roll", required=True)
@click.option("--course", required=True)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_guard
def ins_upload(endpoint, token, roll, course, in_path):
    """Submit an envelope file; its hash is computed here and stored alongside."""
    blob = Path(in_path).read_bytes()
    h_c = hashlib.sha256(blob).digest()
    block = _client(endpoint).upload(token, roll, course, blob, h_c)
    _echo_json({"b": 1, "block": block, "h_c": h_c.hex()})


# --- student -----------------------------------------------------------------

@main.group()
def std():
    """Student-side commands."""


@std.command("register-cta")
@_endpoint_opt
@click.option("--email", required=True)
@click.option("--roll", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Where to write the private key bundle.")
@_guard
def std_register_cta(endpoint, email, roll, out):
    """Register with the authority and save the issued key bundle."""
    bundle = _client(endpoint).cta_register_student(email, roll)
    path = Path(out)
    path.write_text(json.dumps(bundle.to_json(), indent=2))
    path.chmod(0o600)
    _echo_json({"b": 1, "key_file": out})


@std.command("register-cms")
@_endpoint_opt
@click.option("--email", required=True)
@click.option("--password", required=True)
@click.option("--roll", required=True)
@_guard
def std_register_cms(endpoint, email, password, roll):
    _echo_json(_client(endpoint).std_register(email, password, roll))


@std.command("login")
@_endpoint_opt
@click.option("--email", required=True)
@click.option("--password", required=True)
@_guard
def std_login(endpoint, email, password):
    token = _client(endpoint).std_login(email, password)
    _echo_json({"b": 1, "token": token})


@std.command("fetch")
@_endpoint_opt
@_token_opt
@click.option("--roll", required=True)
@click.option("--course", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_guard
def std_fetch(endpoint, token, roll, course, out):
    """Download the stored envelope and the ledger hash for it."""
    data, h_c = _client(endpoint).retrieve(token, roll, course)
    Path(out).write_bytes(data)
    _echo_json({"b": 1, "envelope": out, "h_c": h_c.hex(), "bytes": len(data)})


@std.command("verify")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--hash", "h_c_hex", required=True, help="Expected hash (hex) "
              "from the ledger.")
def std_verify(in_path, h_c_hex):
    """Recompute the envelope hash locally and compare; exit 1 on mismatch."""
    computed = hashlib.sha256(Path(in_path).read_bytes()).hexdigest()
    b = 1 if computed == h_c_hex.lower() else 0
    _echo_json({"b": b, "computed": computed})
    if not b:
        sys.exit(1)


@std.command("recover")
@_endpoint_opt
@click.option("--roll", required=True)
@click.option("--course", required=True)
@click.option("--email", default=None)
@click.option("--password", default=None)
@click.option("--token", envvar="CREDSEC_TOKEN", default=None)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_guard
def std_recover(endpoint, roll, course, email, password, token, out):
    """Restore the store copy from the ledger and save the returned bytes."""
    data = _client(endpoint).recover(roll, course, email=email, password=password,
                                     token=token)
    Path(out).write_bytes(data)
    _echo_json({"b": 1, "envelope": out,
                "h_c": hashlib.sha256(data).hexdigest(), "bytes": len(data)})


@std.command("decrypt")
@click.option("--key-file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@_guard
def std_decrypt(key_file, in_path, out):
    """Decrypt an envelope file with the private key bundle."""
    bundle = _load_bundle(key_file)
    if bundle.d is None:
        raise ValueError("key file has no private exponent; use the student bundle")
    env = envelope_parse(Path(in_path).read_bytes())
    text = m2fe_decrypt(env, bundle.d, bundle.N, bundle.dk, bundle.Y,
                        bundle.S, bundle.T)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        _echo_json({"b": 1, "out": out, "chars": len(text)})
    else:
        _echo_json({"b": 1, "text": text})


# --- inspection and audit ----------------------------------------------------

@main.command("table")
@click.option("--out", default="-", show_default=True,
              type=click.Path(dir_okay=False, allow_dash=True))
def table(out):
    """Dump the character table as two tab-separated columns (code, char)."""
    lines = "".join("%02d\t%s\n" % (code, ch) for ch, code in table_rows())
    if out == "-":
        click.echo(lines, nl=False)
    else:
        Path(out).write_text(lines)


@main.command("chain")
@_config_opt
@click.option("--out", default="-", type=click.Path(dir_okay=False, allow_dash=True))
@_guard
def chain(config_path, out):
    """Print the ledger as JSON (envelope bytes summarized by length)."""
    cfg = load_config(config_path)
    payload = Ledger(cfg.ledger_path).to_json()
    text = json.dumps(payload, indent=2)
    if out == "-":
        click.echo(text)
    else:
        Path(out).write_text(text)


@main.command("inspect")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bases", is_flag=True, help="Also dump the payload as ACGT text.")
@_guard
def inspect(in_path, bases):
    """Decode an envelope file's header without any keys."""
    blob = Path(in_path).read_bytes()
    env = envelope_parse(blob)
    payload = {
        "version": env.version,
        "chunk_digits": env.chunk_digits,
        "cipher_width": env.cipher_width,
        "digit_count": env.digit_count,
        "payload_bases": len(env.bases),
        "payload_bits": 2 * len(env.bases),
        "h_c": hashlib.sha256(blob).hexdigest(),
    }
    if bases:
        payload["bases"] = env.bases
    _echo_json(payload)


# --- harnesses ---------------------------------------------------------------

@main.command("bench")
@click.option("--sizes", default=",".join(str(s) for s in PAPER_SIZES_KB),
              show_default=True, help="Credential sizes in KB, comma-separated.")
@click.option("--instructors", default=3, show_default=True)
@click.option("--students", default=5, show_default=True)
@click.option("--bits", default=1024, show_default=True)
@click.option("--exponent-mode", default="fixed", show_default=True,
              type=click.Choice(["fixed", "random"]))
@click.option("--chunk", default=300, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--parallel", default=1, show_default=True,
              help="Worker threads for the upload phase.")
@click.option("--http", is_flag=True, help="Drive the flows over a live HTTP "
              "server instead of in-process calls.")
@click.option("--out", default="-", type=click.Path(dir_okay=False, allow_dash=True))
@_guard
def bench(sizes, instructors, students, bits, exponent_mode, chunk, seed, parallel,
          http, out):
    """Run the standard experiment and emit one CSV row per phase and size."""
    sizes_kb = tuple(int(s) for s in sizes.split(",") if s)
    rows = run_bench(sizes_kb=sizes_kb, instructors=instructors, students=students,
                     bits=bits, exponent_mode=exponent_mode, chunk=chunk, seed=seed,
                     parallel=parallel, http=http)
    text = rows_to_csv(rows)
    if out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


@main.group()
def tamper():
    """Deliberately corrupt stored data (testing the detection paths)."""


@tamper.command("lds")
@_config_opt
@click.option("--roll", required=True)
@click.option("--course", required=True)
@click.option("--bit", "bits", multiple=True, type=int, help="Bit index to flip.")
@click.option("--byte", "byte_flips", multiple=True, type=int, help="Byte index to flip.")
@click.option("--xor", default=0xFF, show_default=True, help="Mask for byte flips.")
@_guard
def tamper_lds_cmd(config_path, roll, course, bits, byte_flips, xor):
    """Flip bits/bytes inside a stored envelope file."""
    cfg = load_config(config_path)
    from .lds import Lds

    result = tamper_lds(Lds(cfg.lds_root), roll, course, bits=list(bits),
                        byte_flips=list(byte_flips), xor=xor)
    _echo_json(result)


@tamper.command("ledger")
@_config_opt
@click.option("--block", required=True, type=int)
@click.option("--bit", "bits", multiple=True, type=int)
@click.option("--byte", "byte_flips", multiple=True, type=int)
@click.option("--xor", default=0xFF, show_default=True)
@_guard
def tamper_ledger_cmd(config_path, block, bits, byte_flips, xor):
    """Flip bits/bytes inside one persisted ledger block."""
    cfg = load_config(config_path)
    result = tamper_ledger(cfg.ledger_path, block, bits=list(bits),
                           byte_flips=list(byte_flips), xor=xor)
    _echo_json(result)


if __name__ == "__main__":
    main()
