"""Scorer wire protocol: line-delimited JSON over a byte stream.

Request:  {"id": str, "op": "next"|"seq", "role": "direct"|"channel"|"lm",
           "context": [int...], "document": [int...]|null,
           "control": [int...]|null, "prefix": [int...], "target": [int...]|null}
Response: {"id": str, "logprobs": [float...]}   for "next" (length |V|)
          {"id": str, "logprob": float}          for "seq"
          {"id": str|null, "error": str}         on failure

Field semantics by (op, role); "context" always carries the flattened dialog
context (turns joined by <sep>):

  next, direct|lm : prefix = <sos>-framed response prefix; target = null
  next, channel   : prefix = conditioning response prefix (raw content);
                    target = <sos>-framed document prefix
  seq,  direct|lm : prefix = []; target = <sos>..<eos> framed response
  seq,  channel   : prefix = conditioning response prefix (raw content);
                    target = <sos>..<eos> framed document

One JSON object per line, no other framing; floats carry at least 12
significant digits. A session answers requests strictly in order.
"""

import json
import math
import socket

from .data import Turn
from .errors import (
    ConfigError,
    NormalizationError,
    ProtocolError,
    TransportError,
)
from .scorers import Condition, ROLE_CHANNEL, ROLE_DIRECT, ROLE_LM, Scorer
from .vocab import SOS

REMOTE_NORMALIZATION_TOL = 1e-4
WIRE_ROLES = (ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM)


def condition_to_wire(condition):
    from .scorers import flatten_context

    return {
        "context": list(flatten_context(condition.context)),
        "document": list(condition.document) if condition.document is not None else None,
        "control": list(condition.control) if condition.control is not None else None,
    }


def condition_from_wire(obj):
    role = obj["role"]
    if role not in WIRE_ROLES:
        raise ProtocolError("unknown role %r" % (role,), request_id=obj.get("id"))
    context = (Turn("user", tuple(obj.get("context") or ())),)
    kwargs = {}
    if role == ROLE_DIRECT:
        if obj.get("document") is None:
            raise ProtocolError("direct request needs a document",
                                request_id=obj.get("id"))
        kwargs["document"] = tuple(obj["document"])
        if obj.get("control") is not None:
            kwargs["control"] = tuple(obj["control"])
    elif role == ROLE_CHANNEL:
        kwargs["response_prefix"] = tuple(obj.get("prefix") or ())
    return Condition(context=context, role=role, **kwargs)


def encode_request(request_id, op, condition, prefix=None, target=None):
    obj = {"id": request_id, "op": op, "role": condition.role}
    obj.update(condition_to_wire(condition))
    if condition.role == ROLE_CHANNEL:
        obj["prefix"] = list(condition.response_prefix)
    else:
        obj["prefix"] = list(prefix) if prefix is not None else []
    obj["target"] = list(target) if target is not None else None
    return json.dumps(obj, sort_keys=True)


def evaluate_request(obj, scorers):
    """Answer one parsed request against a {role: scorer} registry."""
    request_id = obj.get("id")
    if not isinstance(request_id, str):
        raise ProtocolError("request id must be a string", request_id=None)
    op = obj.get("op")
    if op not in ("next", "seq"):
        raise ProtocolError("unknown op %r" % (op,), request_id=request_id)
    role = obj.get("role")
    scorer = scorers.get(role)
    if scorer is None:
        raise ProtocolError("no scorer for role %r" % (role,), request_id=request_id)
    condition = condition_from_wire(obj)
    if op == "next":
        if role == ROLE_CHANNEL:
            prefix = tuple(obj.get("target") or ())
        else:
            prefix = tuple(obj.get("prefix") or ())
        if not prefix or prefix[0] != SOS:
            raise ProtocolError("next prefix must start with <sos>",
                                request_id=request_id)
        logprobs = scorer.next_token_logprobs(condition, prefix)
        return {"id": request_id, "logprobs": list(logprobs)}
    target = obj.get("target")
    if target is None:
        raise ProtocolError("seq request needs a target", request_id=request_id)
    logprob = scorer.sequence_logprob(condition, tuple(target))
    return {"id": request_id, "logprob": logprob}


class RemoteScorer(Scorer):
    """Client-side scorer speaking the wire protocol over TCP.

    One request in flight per connection; transport failures raise a
    retriable TransportError carrying the request id.
    """

    def __init__(self, vocab, role, host, port, timeout=10.0):
        super().__init__(vocab, role)
        self.host = host
        self.port = port
        self.timeout = timeout
        self._sock = None
        self._fh = None
        self._counter = 0

    def _connect(self):
        if self._sock is None:
            try:
                self._sock = socket.create_connection(
                    (self.host, self.port), timeout=self.timeout
                )
                self._fh = self._sock.makefile("rwb")
            except OSError as exc:
                self._sock = None
                raise TransportError("connect failed: %s" % exc)

    def close(self):
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None
                self._fh = None

    def _round_trip(self, line, request_id):
        self._connect()
        try:
            self._fh.write(line.encode("utf-8") + b"\n")
            self._fh.flush()
            reply = self._fh.readline()
        except OSError as exc:
            self.close()
            raise TransportError("transport failure: %s" % exc, request_id=request_id)
        if not reply:
            self.close()
            raise TransportError("connection closed by server", request_id=request_id)
        try:
            obj = json.loads(reply.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError("malformed reply: %s" % exc, request_id=request_id)
        if obj.get("id") != request_id:
            raise ProtocolError(
                "response id %r does not match request id %r"
                % (obj.get("id"), request_id),
                request_id=request_id,
            )
        if "error" in obj:
            raise ProtocolError("server error: %s" % obj["error"],
                                request_id=request_id)
        return obj

    def _next_id(self):
        self._counter += 1
        return "r%d" % self._counter

    def next_token_logprobs(self, condition, prefix):
        self._check_prefix(condition, prefix)
        request_id = self._next_id()
        if condition.role == ROLE_CHANNEL:
            line = encode_request(request_id, "next", condition, target=prefix)
        else:
            line = encode_request(request_id, "next", condition, prefix=prefix)
        obj = self._round_trip(line, request_id)
        logprobs = obj.get("logprobs")
        if not isinstance(logprobs, list) or len(logprobs) != len(self.vocab):
            raise ProtocolError("logprobs vector has wrong length",
                                request_id=request_id)
        total = math.fsum(math.exp(lp) for lp in logprobs)
        if abs(total - 1.0) > REMOTE_NORMALIZATION_TOL:
            raise NormalizationError(
                "distribution sums to %r" % total, request_id=request_id
            )
        return logprobs

    def sequence_logprob(self, condition, sequence):
        request_id = self._next_id()
        line = encode_request(request_id, "seq", condition, target=sequence)
        obj = self._round_trip(line, request_id)
        if "logprob" not in obj:
            raise ProtocolError("seq reply missing logprob", request_id=request_id)
        return float(obj["logprob"])

    def prefix_logprob(self, condition, prefix):
        # Scored step-by-step through the wire; matches the local chain rule.
        prefix = tuple(prefix)
        if not prefix or prefix[0] != SOS:
            raise ConfigError("prefix must begin with <sos>")
        total = 0.0
        for i in range(1, len(prefix)):
            total += self.next_token_logprobs(condition, prefix[:i])[prefix[i]]
            if total == float("-inf"):
                break
        return total
