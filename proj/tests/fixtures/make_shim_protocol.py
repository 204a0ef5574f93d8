"""Regenerates shim_protocol.json, the recorded request/response suite shared
with the model shim. Each interaction is matched by method, route and a
subset of the request body."""
import base64
import json
import pathlib
import struct
import zlib


def png(width, height, rgb):
    raw = b"".join(b"\x00" + bytes(rgb) * width for _ in range(height))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    data = b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b"")
    return base64.b64encode(data).decode()


def ok(payload):
    return {"ok": True, "payload": payload}


def err(code, message):
    return {"ok": False, "error": {"code": code, "message": message}}


interactions = [
    {"name": "capabilities", "method": "GET", "route": "/v1/capabilities", "match": None, "status": 200,
     "response": ok({"kinds": ["reasoning", "text_encoder", "image_editor", "latent_encoder", "denoiser"],
                     "dims": {"text_encoder": 8, "latent_encoder": 12},
                     "model_ids": {"reasoning": "gpt-oss-20b", "text_encoder": "t5-xxl",
                                   "image_editor": "qwen-image-edit", "latent_encoder": "cogvideox-vae",
                                   "denoiser": "cogvideox-5b"}})},
    {"name": "reason_snell", "method": "POST", "route": "/v1/reason",
     "match": {"task": "regenerate_formula_names",
               "payload": {"description": "light bends entering water",
                           "candidates": ["Snell's law", "lens equation"]}},
     "status": 200, "response": ok({"names": ["Snell's law", "refraction at an interface"]})},
    {"name": "reason_bad_schema", "method": "POST", "route": "/v1/reason",
     "match": {"task": "classify_law", "payload": {"description": "malformed reply"}},
     "status": 200, "response": ok({"law": 42})},
    {"name": "reason_disabled", "method": "POST", "route": "/v1/reason",
     "match": {"task": "classify_law", "payload": {"description": "role disabled"}},
     "status": 501, "response": err("role_disabled", "reasoning role is not enabled")},
    {"name": "encode_hello", "method": "POST", "route": "/v1/encode-text", "match": {"text": "hello"},
     "status": 200, "response": ok({"vector": [0.125, -0.5, 0.25, 1.0, 0.0, -0.75, 0.5, 0.375]})},
    {"name": "encode_short", "method": "POST", "route": "/v1/encode-text", "match": {"text": "short vector"},
     "status": 200, "response": ok({"vector": [0.1, 0.2, 0.3, 0.4, 0.5]})},
    {"name": "encode_slow", "method": "POST", "route": "/v1/encode-text", "match": {"text": "slow"},
     "status": 200, "delay_ms": 400, "response": ok({"vector": [0.0] * 8})},
    {"name": "encode_flaky", "method": "POST", "route": "/v1/encode-text", "match": {"text": "flaky"},
     "status": 200, "fail_first": 2, "response": ok({"vector": [1.0] * 8})},
    {"name": "generate", "method": "POST", "route": "/v1/edit-image",
     "match": {"mode": "generate", "width": 16, "height": 9},
     "status": 200, "response": ok({"image": png(16, 9, (255, 0, 0))})},
    {"name": "generate_wrong_size", "method": "POST", "route": "/v1/edit-image",
     "match": {"mode": "generate", "width": 1360, "height": 768},
     "status": 200, "response": ok({"image": png(512, 512, (0, 0, 255))})},
    {"name": "edit", "method": "POST", "route": "/v1/edit-image",
     "match": {"mode": "edit", "width": 16, "height": 9, "instruction": "turn it blue"},
     "status": 200, "response": ok({"image": png(16, 9, (0, 0, 255))})},
    {"name": "edit_rejected", "method": "POST", "route": "/v1/edit-image",
     "match": {"mode": "edit", "width": 4, "height": 4},
     "status": 400, "response": err("image_shape", "source does not match the configured resolution")},
    {"name": "encode_image", "method": "POST", "route": "/v1/encode-image", "match": {},
     "status": 200, "response": ok({"latent": [0.5] * 12})},
    {"name": "denoise", "method": "POST", "route": "/v1/denoise",
     "match": {"schedule_run_id": "run-1", "embedding_run_id": "run-1"},
     "status": 200, "response": ok({"uri": "/srv/shim/out/run-1.mp4", "metadata": {"fps": 8}})},
]

out = pathlib.Path(__file__).with_name("shim_protocol.json")
out.write_text(json.dumps({"version": 1, "interactions": interactions}, indent=2) + "\n")
