"""Timing harness over the whole stack.

Measures registration, key distribution, encryption, upload, retrieval with
and without recovery, decryption and the cipher/plain size ratio, per
credential size.  Runs in-process by default so the numbers describe the
algorithms, not the loopback interface; HTTP mode measures the deployed
shape instead (encryption and decryption stay local either way, since those
are client-side operations).
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .codec import ALPHABET
from .config import Config
from .m2fe import envelope_parse, envelope_serialize, m2fe_decrypt, m2fe_encrypt
from .service import Stack, build_stack
from .tamper import tamper_lds

PAPER_SIZES_KB = (50, 100, 200, 300, 500)
CSV_FIELDS = ("phase", "param", "elapsed_ms", "bytes_in", "bytes_out")


@dataclass(frozen=True)
class BenchRow:
    phase: str
    param: str
    elapsed_ms: float
    bytes_in: int
    bytes_out: int


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = max((time.perf_counter() - self.start) * 1000.0, 1e-6)


def random_text(rng: random.Random, size: int) -> str:
    return "".join(rng.choices(ALPHABET, k=size))


class _LocalOps:
    def __init__(self, stack: Stack):
        self.cta = stack.cta
        self.cms = stack.cms

    def cta_register_instructor(self, email, ins_id):
        return self.cta.register_instructor(email, ins_id)

    def cta_register_student(self, email, roll):
        return self.cta.register_student(email, roll)

    def ins_register(self, email, password, ins_id, nonce):
        self.cms.register_instructor(email, password, ins_id, nonce)

    def std_register(self, email, password, roll):
        self.cms.register_student(email, password, roll)

    def ins_login(self, email, password, nonce):
        return self.cms.login(email, password, nonce=nonce).token

    def std_login(self, email, password):
        return self.cms.login(email, password).token

    def fetch_encryption_key(self, roll):
        return self.cta.encryption_bundle(roll)

    def upload(self, token, roll, course, blob, h_c):
        self.cms.upload(token, roll, course, blob, h_c)

    def retrieve(self, token, roll, course):
        return self.cms.retrieve(token, roll, course)

    def recover(self, roll, course, token):
        return self.cms.recover(roll, course, token=token)


class _HttpOps:
    def __init__(self, client):
        self.client = client

    def cta_register_instructor(self, email, ins_id):
        return self.client.cta_register_instructor(email, ins_id)

    def cta_register_student(self, email, roll):
        return self.client.cta_register_student(email, roll)

    def ins_register(self, email, password, ins_id, nonce):
        self.client.ins_register(email, password, ins_id, nonce)

    def std_register(self, email, password, roll):
        self.client.std_register(email, password, roll)

    def ins_login(self, email, password, nonce):
        return self.client.ins_login(email, password, nonce)

    def std_login(self, email, password):
        return self.client.std_login(email, password)

    def fetch_encryption_key(self, roll):
        return self.client.fetch_encryption_key(roll)

    def upload(self, token, roll, course, blob, h_c):
        self.client.upload(token, roll, course, blob, h_c)

    def retrieve(self, token, roll, course):
        return self.client.retrieve(token, roll, course)

    def recover(self, roll, course, token):
        return self.client.recover(roll, course, token=token)


def run_bench(sizes_kb: tuple[int, ...] = PAPER_SIZES_KB, instructors: int = 3,
              students: int = 5, bits: int = 1024, exponent_mode: str = "fixed",
              chunk: int = 300, K: int = 16, seed: int | None = None,
              data_dir: str | Path | None = None, parallel: int = 1,
              http: bool = False) -> list[BenchRow]:
    rng = random.Random(seed)
    rows: list[BenchRow] = []
    owns_dir = data_dir is None
    tmp = tempfile.TemporaryDirectory(prefix="credsec-bench-") if owns_dir else None
    root = Path(tmp.name) if owns_dir else Path(data_dir)
    server = None
    try:
        cfg = Config(data_dir=root, rsa_bits=bits, exponent_mode=exponent_mode,
                     chunk_digits=chunk, dummy_budget=K)
        stack = build_stack(cfg, rng=rng)
        if http:
            from .httpapi import ServiceClient, create_cms_app, serve_in_thread
            base_url, server = serve_in_thread(create_cms_app(stack.cms, stack.cta))
            ops = _HttpOps(ServiceClient(base_url))
        else:
            ops = _LocalOps(stack)

        with _Timer() as t:
            ins_tokens = []
            for i in range(instructors):
                email, ins_id = f"ins{i}@bench.local", f"INS{i:03d}"
                nonce = ops.cta_register_instructor(email, ins_id)
                ops.ins_register(email, "pw-ins", ins_id, nonce)
                ins_tokens.append(ops.ins_login(email, "pw-ins", nonce))
            std_bundles = {}
            std_tokens = {}
            for i in range(students):
                email, roll = f"std{i}@bench.local", f"R{i:03d}"
                std_bundles[roll] = ops.cta_register_student(email, roll)
                ops.std_register(email, "pw-std", roll)
                std_tokens[roll] = ops.std_login(email, "pw-std")
        rows.append(BenchRow("register", str(instructors + students), t.ms, 0, 0))

        with _Timer() as t:
            for roll in std_bundles:
                ops.fetch_encryption_key(roll)
        rows.append(BenchRow("keydist", str(students), t.ms, 0, 0))

        rolls = list(std_bundles)
        uploads = []
        for idx, kb in enumerate(sizes_kb):
            size = kb * 1024
            roll = rolls[idx % len(rolls)]
            bundle = std_bundles[roll]
            text = random_text(rng, size)
            # course names carry the job index so repeated sizes never
            # collide on the same (roll, course) entry
            course = f"CRS{idx:02d}"

            with _Timer() as t:
                env, h_c = m2fe_encrypt(text, bundle.e, bundle.N, bundle.dk, bundle.Y,
                                        bundle.S, bundle.T, k=bundle.k)
                blob = envelope_serialize(env)
            rows.append(BenchRow("encrypt", str(kb), t.ms, len(text), len(blob)))

            with _Timer() as t:
                payload_bits = 2 * len(env.bases)
            rows.append(BenchRow("size_ratio", str(kb), t.ms, 8 * len(text), payload_bits))

            uploads.append((kb, course, roll, ins_tokens[idx % len(ins_tokens)],
                            bundle, text, blob, h_c))

        def _upload(job):
            kb, course, roll, token, bundle, text, blob, h_c = job
            with _Timer() as t:
                ops.upload(token, roll, course, blob, h_c)
            return BenchRow("upload", str(kb), t.ms, len(blob), 0)

        if parallel > 1:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                rows.extend(pool.map(_upload, uploads))
        else:
            rows.extend(map(_upload, uploads))

        for kb, course, roll, _ins_token, bundle, text, blob, h_c in uploads:
            token = std_tokens[roll]
            with _Timer() as t:
                data, stored = ops.retrieve(token, roll, course)
            if hashlib.sha256(data).digest() != stored:
                raise RuntimeError(f"clean retrieve failed verification for {course}")
            rows.append(BenchRow("retrieve", str(kb), t.ms, 0, len(data)))

            # corrupt the store copy, then run the full notice-and-repair path
            tamper_lds(stack.lds, roll, course, byte_flips=[len(blob) // 2], xor=0x55)
            with _Timer() as t:
                data, stored = ops.retrieve(token, roll, course)
                if hashlib.sha256(data).digest() != stored:
                    ops.recover(roll, course, token)
                    data, stored = ops.retrieve(token, roll, course)
            if hashlib.sha256(data).digest() != stored:
                raise RuntimeError(f"recovery failed for {course}")
            rows.append(BenchRow("retrieve_recover", str(kb), t.ms, 0, len(data)))

            with _Timer() as t:
                out = m2fe_decrypt(envelope_parse(data), bundle.d, bundle.N, bundle.dk,
                                   bundle.Y, bundle.S, bundle.T)
            if out != text:
                raise RuntimeError(f"decrypt mismatch for {course}")
            rows.append(BenchRow("decrypt", str(kb), t.ms, len(data), len(out)))
    finally:
        if server is not None:
            server.should_exit = True
            time.sleep(0.05)
        if tmp is not None:
            tmp.cleanup()
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([row.phase, row.param, f"{row.elapsed_ms:.3f}",
                         row.bytes_in, row.bytes_out])
    return buf.getvalue()
