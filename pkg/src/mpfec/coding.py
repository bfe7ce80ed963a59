"""Systematic RLNC codecs and the windowed Gaussian-elimination decoder.

Two encoder flavours share one credit-based rate controller:

* sliding mode combines the last ``encoding_window`` source symbols,
* block mode combines the symbols of the current generation seen so far.

The decoder keeps a bounded window of sequence numbers. Anything pushed out
of that window undecoded is lost for good; decoded symbols are released
strictly in sequence order.
"""

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .galois import MUL_TABLE, gf_combine, gf_mul_bytes
from .rational import as_fraction

SYSTEMATIC = 0
CODED = 1

# Python nested lists beat numpy scalar indexing for single-byte arithmetic.
_MUL = MUL_TABLE.tolist()
_INV = [0] * 256
for _a in range(1, 256):
    _INV[_a] = next(_b for _b in range(1, 256) if _MUL[_a][_b] == 1)
del _a


class ProtocolError(ValueError):
    """A packet violates the session contract (e.g. payload size mismatch)."""


@dataclass
class SourceSymbol:
    seq: int
    payload: np.ndarray
    created_at: float | None = None


@dataclass
class CodedSymbol:
    window_start: int
    coefficients: np.ndarray  # uint8, coefficients[j] applies to window_start + j
    payload: np.ndarray


@dataclass
class Packet:
    kind: int
    body: SourceSymbol | CodedSymbol
    send_seq: int = 0


def _as_payload(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        if data.dtype != np.uint8 or data.ndim != 1:
            raise ValueError("payload must be a 1-D uint8 array")
        return data
    return np.frombuffer(bytes(data), dtype=np.uint8)


@dataclass
class EncoderConfig:
    code_rate: Fraction
    mode: str = "sliding"
    encoding_window: int | None = None   # w_e, sliding mode
    generation_size: int | None = None   # g, block mode

    def __post_init__(self):
        self.code_rate = as_fraction(self.code_rate)
        if not 0 < self.code_rate <= 1:
            raise ValueError(f"code rate must be in (0, 1], got {self.code_rate}")
        if self.mode == "sliding":
            w = self.encoding_window
            if w is None or w < 1:
                raise ValueError("sliding mode needs encoding_window >= 1")
            if self.code_rate < 1:
                # window must cover at least n_s = R/(1-R) source symbols,
                # otherwise coded packets cannot keep up with the rate
                r = self.code_rate
                need = -((-r.numerator) // (r.denominator - r.numerator))
                if w < need:
                    raise ValueError(
                        f"encoding_window {w} too small for code rate "
                        f"{self.code_rate}: need at least {need}"
                    )
        elif self.mode == "block":
            if self.generation_size is None or self.generation_size < 1:
                raise ValueError("block mode needs generation_size >= 1")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def window(self) -> int:
        """Symbol span a coded packet may combine (w_e or g)."""
        return (self.encoding_window if self.mode == "sliding"
                else self.generation_size)


class Encoder:
    """Systematic encoder with credit-based redundancy.

    Every pushed source symbol goes out as-is; the credit counter gains
    1/R - 1 per push and each time it reaches 1 a coded packet is emitted
    and the counter drops by 1. The counter is an exact Fraction, so the
    emission pattern is identical on every platform.
    """

    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.credit = Fraction(0)
        self._increment = 1 / config.code_rate - 1
        self._cap = config.window
        self._ring = None          # (cap, S) symbol buffer
        self._head = 0             # slot of the oldest buffered symbol
        self._count = 0
        self._next_seq = 0
        self._send_seq = 0
        self._payload_size = None

    @property
    def symbols_pushed(self) -> int:
        return self._next_seq

    @property
    def coded_emitted(self) -> int:
        return self._send_seq - self._next_seq

    def push_source(self, symbol: SourceSymbol) -> list[Packet]:
        """Feed the next source symbol; returns the packets to transmit."""
        if symbol.seq != self._next_seq:
            raise ValueError(
                f"out-of-order push: expected seq {self._next_seq}, got {symbol.seq}"
            )
        payload = _as_payload(symbol.payload)
        if self._ring is None:
            self._payload_size = payload.shape[0]
            self._ring = np.zeros((self._cap, self._payload_size), dtype=np.uint8)
        elif payload.shape[0] != self._payload_size:
            raise ValueError(
                f"payload size changed: {payload.shape[0]} != {self._payload_size}"
            )

        if self.config.mode == "block" and self._count == self.config.generation_size:
            raise ValueError("generation full: call end_generation() first")
        if self._count < self._cap:
            slot = (self._head + self._count) % self._cap
            self._count += 1
        else:  # sliding window full: overwrite the oldest
            slot = self._head
            self._head = (self._head + 1) % self._cap
        self._ring[slot] = payload
        self._next_seq += 1

        out = [self._packet(SYSTEMATIC, symbol)]
        self.credit += self._increment
        while self.credit >= 1:
            self.credit -= 1
            out.append(self._packet(CODED, self.make_coded()))
        return out

    def make_coded(self) -> CodedSymbol:
        """Combine the buffered symbols with fresh uniform coefficients."""
        if self._count == 0:
            raise ValueError("no symbols buffered")
        k = self._count
        coeffs = self.rng.integers(0, 256, size=k, dtype=np.uint8)
        if self._head == 0:
            payload = gf_combine(coeffs, self._ring[:k])
        else:
            # buffer has wrapped (k == cap): permute coefficients to slot order
            slot_coeffs = np.empty(k, dtype=np.uint8)
            slot_coeffs[(self._head + np.arange(k)) % k] = coeffs
            payload = gf_combine(slot_coeffs, self._ring)
        return CodedSymbol(self._next_seq - k, coeffs, payload)

    def end_generation(self) -> list[Packet]:
        """Close the current generation (block mode only)."""
        if self.config.mode != "block":
            raise ValueError("end_generation() is only valid in block mode")
        out = []
        while self.credit >= 1 and self._count > 0:
            self.credit -= 1
            out.append(self._packet(CODED, self.make_coded()))
        self._count = 0
        self._head = 0
        return out

    def _packet(self, kind, body) -> Packet:
        p = Packet(kind, body, self._send_seq)
        self._send_seq += 1
        return p


class _Row:
    __slots__ = ("refs", "payload")

    def __init__(self, refs, payload):
        self.refs = refs          # {seq: coefficient}, pivot = min(refs), coeff 1
        self.payload = payload


class Decoder:
    """Gaussian-elimination decoder over a bounded sequence window.

    The elimination matrix is kept in reduced row-echelon form over the
    still-unknown symbols: decoded payloads are substituted out immediately,
    each stored row is pivoted on its lowest sequence number, and pivot
    columns are cleared from every other row. A symbol is therefore
    decodable exactly when some row shrinks to a single reference.
    """

    def __init__(self, decoding_window: int):
        if decoding_window < 1:
            raise ValueError("decoding_window must be >= 1")
        self.w_d = decoding_window
        self.low = 0               # lowest tracked seq
        self.high = -1             # highest seq ever referenced
        self._watermark = -1       # all seqs <= watermark are delivered or lost
        self._decoded = {}         # seq -> created_at (payload lives in the ring)
        self._rows = {}            # pivot seq -> _Row
        self._cols = {}            # seq -> set of pivots whose row references it
        self._ring = None          # (w_d, S) decoded payload store
        self._payload_size = None
        self._delivered = 0
        self._lost = 0

    def stats(self) -> tuple[int, int]:
        """(delivered, lost) counts so far."""
        return self._delivered, self._lost

    def add(self, packet: Packet, now: float = 0.0) -> list[tuple[SourceSymbol, float]]:
        """Process one received packet; returns symbols released in order."""
        body = packet.body
        if packet.kind == SYSTEMATIC:
            payload = _as_payload(body.payload)
            newest = body.seq
        elif packet.kind == CODED:
            payload = _as_payload(body.payload)
            newest = body.window_start + len(body.coefficients) - 1
        else:
            raise ProtocolError(f"unknown packet kind {packet.kind}")
        self._check_size(payload)

        released = []
        if newest > self.high:
            self.high = newest
            new_low = self.high - self.w_d + 1
            if new_low > self.low:
                self._evict_below(new_low, now, released)

        if packet.kind == SYSTEMATIC:
            s = body.seq
            if s >= self.low and s not in self._decoded:
                self._run(deque([(s, np.array(payload), body.created_at)]),
                          deque(), now)
        else:
            self._ingest_coded(body, payload, now)
        self._release_ready(now, released)
        return released

    def drain(self, final_seq: int, now: float = 0.0) -> list[tuple[SourceSymbol, float]]:
        """End of stream: resolve every seq up to final_seq as delivered or lost."""
        released = []
        self._finalize_through(final_seq, now, released)
        self._rows.clear()
        self._cols.clear()
        return released

    # -- internals ---------------------------------------------------------

    def _check_size(self, payload):
        n = payload.shape[0]
        if self._payload_size is None:
            self._payload_size = n
            self._ring = np.zeros((self.w_d, n), dtype=np.uint8)
        elif n != self._payload_size:
            raise ProtocolError(
                f"payload length {n} does not match session size {self._payload_size}"
            )

    def _ingest_coded(self, body, payload, now):
        start = body.window_start
        low = self.low
        decoded = self._decoded
        pend = {}
        dec_seqs = []
        dec_coeffs = []
        for j, c in enumerate(body.coefficients.tolist()):
            if c == 0:
                continue
            s = start + j
            if s < low:
                # references data already flushed from the window
                return
            if s in decoded:
                dec_seqs.append(s % self.w_d)
                dec_coeffs.append(c)
            else:
                pend[s] = c
        if not pend:
            return  # rank-0 after substitution (duplicate, dependent or all-zero)
        payload = np.array(payload)
        if dec_seqs:
            payload ^= gf_combine(np.array(dec_coeffs, dtype=np.uint8),
                                  self._ring[dec_seqs])
        self._run(deque(), deque([(pend, payload)]), now)

    def _run(self, decode_q, insert_q, now):
        """Worklist loop keeping the matrix in reduced row-echelon form."""
        rows = self._rows
        cols = self._cols
        while decode_q or insert_q:
            while decode_q:
                seq, payload, created = decode_q.popleft()
                if seq in self._decoded:
                    continue
                self._decoded[seq] = created
                self._ring[seq % self.w_d] = payload
                pivot_row = rows.pop(seq, None)
                if pivot_row is not None:
                    # seq was a pivot: the leftover terms form a fresh equation
                    refs = pivot_row.refs
                    del refs[seq]
                    for f in refs:
                        cols[f].discard(seq)
                    pivot_row.payload ^= payload
                    insert_q.append((refs, pivot_row.payload))
                holders = cols.pop(seq, None)
                if holders:
                    for q in holders:
                        row = rows.get(q)
                        if row is None:
                            continue
                        c = row.refs.pop(seq, None)
                        if c is None:
                            continue
                        row.payload ^= gf_mul_bytes(c, payload)
                        if len(row.refs) == 1:
                            decode_q.append(self._pop_singleton(q))
            if insert_q:
                item = insert_q.popleft()
                self._insert(item[0], item[1], decode_q)

    def _insert(self, refs, payload, decode_q):
        rows = self._rows
        cols = self._cols
        # clear every pivot column present in the incoming row
        pivot_refs = sorted(f for f in refs if f in rows)
        for p in pivot_refs:
            c = refs.pop(p)
            row = rows[p]
            mul = _MUL[c]
            for f, rc in row.refs.items():
                if f == p:
                    continue
                x = refs.get(f, 0) ^ mul[rc]
                if x:
                    refs[f] = x
                else:
                    del refs[f]
            payload = payload ^ gf_mul_bytes(c, row.payload)
        if not refs:
            return  # linearly dependent: rank unchanged
        p = min(refs)
        c0 = refs[p]
        if c0 != 1:
            inv = _INV[c0]
            mul = _MUL[inv]
            refs = {f: mul[rc] for f, rc in refs.items()}
            payload = gf_mul_bytes(inv, payload)
        if len(refs) == 1:
            decode_q.append((p, payload, None))
            return
        rows[p] = _Row(refs, payload)
        for f in refs:
            if f != p:
                cols.setdefault(f, set()).add(p)
        # restore reduced form: remove the new pivot from rows referencing it
        holders = cols.pop(p, None)
        if holders:
            for q in holders:
                row = rows.get(q)
                if row is None:
                    continue
                c = row.refs.pop(p, None)
                if c is None:
                    continue
                mul = _MUL[c]
                rrefs = row.refs
                for f, rc in refs.items():
                    if f == p:
                        continue
                    prev = rrefs.get(f)
                    x = (prev or 0) ^ mul[rc]
                    if x:
                        rrefs[f] = x
                        if prev is None:
                            cols.setdefault(f, set()).add(q)
                    elif prev is not None:
                        del rrefs[f]
                        cols[f].discard(q)
                row.payload ^= gf_mul_bytes(c, payload)
                if len(row.refs) == 1:
                    decode_q.append(self._pop_singleton(q))

    def _pop_singleton(self, key):
        row = self._rows.pop(key)
        (f, c), = row.refs.items()
        holders = self._cols.get(f)
        if holders:
            holders.discard(key)
        payload = row.payload if c == 1 else gf_mul_bytes(_INV[c], row.payload)
        return (f, payload, None)

    def _evict_below(self, new_low, now, released):
        rows = self._rows
        cols = self._cols
        for p in [p for p in rows if p < new_low]:
            row = rows.pop(p)
            for f in row.refs:
                if f != p:
                    holders = cols.get(f)
                    if holders:
                        holders.discard(p)
        self._finalize_through(new_low - 1, now, released)
        decoded = self._decoded
        for s in range(self.low, new_low):
            decoded.pop(s, None)
        self.low = new_low

    def _finalize_through(self, s_end, now, released):
        """Every unresolved seq <= s_end becomes delivered (if decoded) or lost."""
        decoded = self._decoded
        for s in range(self._watermark + 1, s_end + 1):
            if s in decoded:
                self._emit(s, now, released)
            else:
                self._lost += 1
        if s_end > self._watermark:
            self._watermark = s_end

    def _release_ready(self, now, released):
        decoded = self._decoded
        s = self._watermark + 1
        while s in decoded:
            self._emit(s, now, released)
            self._watermark = s
            s += 1

    def _emit(self, s, now, released):
        payload = np.array(self._ring[s % self.w_d])
        released.append((SourceSymbol(s, payload, self._decoded[s]), now))
        self._delivered += 1


# -- wire format -----------------------------------------------------------
# kind byte (0 systematic, 1 coded); systematic: seq u64be + payload;
# coded: window_start u64be, coefficient count u16be, coefficients, payload.

def serialize_packet(packet: Packet) -> bytes:
    body = packet.body
    if packet.kind == SYSTEMATIC:
        return (bytes([SYSTEMATIC]) + body.seq.to_bytes(8, "big")
                + _as_payload(body.payload).tobytes())
    if packet.kind == CODED:
        coeffs = np.asarray(body.coefficients, dtype=np.uint8)
        return (bytes([CODED]) + body.window_start.to_bytes(8, "big")
                + len(coeffs).to_bytes(2, "big") + coeffs.tobytes()
                + _as_payload(body.payload).tobytes())
    raise ProtocolError(f"unknown packet kind {packet.kind}")


def deserialize_packet(data: bytes, send_seq: int = 0) -> Packet:
    if len(data) < 9:
        raise ProtocolError("truncated packet")
    kind = data[0]
    if kind == SYSTEMATIC:
        seq = int.from_bytes(data[1:9], "big")
        payload = np.frombuffer(data[9:], dtype=np.uint8)
        return Packet(SYSTEMATIC, SourceSymbol(seq, payload), send_seq)
    if kind == CODED:
        if len(data) < 11:
            raise ProtocolError("truncated packet")
        window_start = int.from_bytes(data[1:9], "big")
        count = int.from_bytes(data[9:11], "big")
        if len(data) < 11 + count:
            raise ProtocolError("truncated coefficient vector")
        coeffs = np.frombuffer(data[11:11 + count], dtype=np.uint8)
        payload = np.frombuffer(data[11 + count:], dtype=np.uint8)
        return Packet(CODED, CodedSymbol(window_start, coeffs, payload), send_seq)
    raise ProtocolError(f"unknown packet kind {kind}")
