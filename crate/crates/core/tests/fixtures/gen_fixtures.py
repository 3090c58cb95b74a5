#!/usr/bin/env python3
"""Builds the APK and certificate fixtures used by the extraction tests.

Everything here is written independently of the Rust parser: binary XML and
resource tables are assembled byte-by-byte, certificates and PKCS#7 signatures
come from the `cryptography` package, and every fingerprint is cross-checked
with `openssl`. Expected values land in expected.json next to the fixtures.

Run from this directory: python3 gen_fixtures.py
"""

import base64
import datetime
import hashlib
import io
import json
import os
import struct
import subprocess
import zipfile

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, padding, rsa
from cryptography.hazmat.primitives.serialization import pkcs7
from cryptography.x509.oid import NameOID

HERE = os.path.dirname(os.path.abspath(__file__))
APK_DIR = os.path.join(HERE, "apks")
NOT_BEFORE = datetime.datetime(2020, 1, 1, tzinfo=datetime.timezone.utc)
NOT_AFTER = datetime.datetime(2050, 1, 1, tzinfo=datetime.timezone.utc)

ANDROID_NS = "http://schemas.android.com/apk/res/android"
ATTR_LABEL = 0x01010001

# ---------------------------------------------------------------- certificates


def name(**kw):
    oids = {
        "cn": NameOID.COMMON_NAME,
        "o": NameOID.ORGANIZATION_NAME,
        "ou": NameOID.ORGANIZATIONAL_UNIT_NAME,
        "l": NameOID.LOCALITY_NAME,
        "st": NameOID.STATE_OR_PROVINCE_NAME,
        "c": NameOID.COUNTRY_NAME,
    }
    attrs = []
    for key in ["c", "st", "l", "o", "ou", "cn"]:
        if key in kw:
            attrs.append(x509.NameAttribute(oids[key], kw[key]))
    return x509.Name(attrs)


def make_cert(subject, key, issuer=None, issuer_key=None, serial=None):
    issuer = issuer or subject
    issuer_key = issuer_key or key
    builder = (
        x509.CertificateBuilder()
        .subject_name(subject)
        .issuer_name(issuer)
        .public_key(key.public_key())
        .serial_number(serial or x509.random_serial_number())
        .not_valid_before(NOT_BEFORE)
        .not_valid_after(NOT_AFTER)
    )
    return builder.sign(issuer_key, hashes.SHA256())


def rsa_key():
    return rsa.generate_private_key(public_exponent=65537, key_size=2048)


def ec_key():
    return ec.generate_private_key(ec.SECP256R1())


def der(cert):
    return cert.public_bytes(serialization.Encoding.DER)


def openssl_sha256(data):
    out = subprocess.run(
        ["openssl", "dgst", "-sha256", "-r"], input=data, capture_output=True, check=True
    ).stdout.decode()
    return out.split()[0].lower()


def fingerprint(cert):
    fp = cert.fingerprint(hashes.SHA256()).hex()
    assert fp == openssl_sha256(der(cert)) == hashlib.sha256(der(cert)).hexdigest()
    return fp


def subject_fields(n):
    out = {}
    mapping = {
        NameOID.COMMON_NAME: "common_name",
        NameOID.ORGANIZATION_NAME: "organization",
        NameOID.ORGANIZATIONAL_UNIT_NAME: "organizational_unit",
        NameOID.LOCALITY_NAME: "locality",
        NameOID.STATE_OR_PROVINCE_NAME: "state",
        NameOID.COUNTRY_NAME: "country",
    }
    for oid, field in mapping.items():
        vals = n.get_attributes_for_oid(oid)
        out[field] = vals[0].value if vals else None
    return out


# ---------------------------------------------------------------- binary XML


class StringPool:
    def __init__(self, utf8=False):
        self.strings = []
        self.utf8 = utf8

    def add(self, s):
        if s not in self.strings:
            self.strings.append(s)
        return self.strings.index(s)

    def encode(self):
        data = b""
        offsets = []
        for s in self.strings:
            offsets.append(len(data))
            if self.utf8:
                raw = s.encode("utf-8")
                u16 = len(s.encode("utf-16-le")) // 2
                data += encode_len8(u16) + encode_len8(len(raw)) + raw + b"\x00"
            else:
                raw = s.encode("utf-16-le")
                data += struct.pack("<H", len(raw) // 2) + raw + b"\x00\x00"
        while len(data) % 4:
            data += b"\x00"
        header_size = 28
        strings_start = header_size + 4 * len(offsets)
        flags = 0x100 if self.utf8 else 0
        body = b"".join(struct.pack("<I", o) for o in offsets) + data
        size = header_size + len(body)
        header = struct.pack(
            "<HHIIIIII", 0x0001, header_size, size, len(self.strings), 0, flags, strings_start, 0
        )
        return header + body


def encode_len8(n):
    if n > 0x7F:
        return bytes([0x80 | (n >> 8), n & 0xFF])
    return bytes([n])


def chunk(kind, header_size, header_rest, body):
    size = header_size + len(body)
    return struct.pack("<HHI", kind, header_size, size) + header_rest + body


def compile_manifest(package, label=None, label_ref=None, utf8=False, with_resmap=True):
    """Compile <manifest package=..><application android:label=../></manifest>."""
    pool = StringPool(utf8=utf8)
    # attribute names with resource ids come first so the resource map lines up
    label_idx = pool.add("label")
    android_prefix = pool.add("android")
    android_uri = pool.add(ANDROID_NS)
    manifest_idx = pool.add("manifest")
    package_attr = pool.add("package")
    app_idx = pool.add("application")
    package_val = pool.add(package)
    label_val = pool.add(label) if label is not None else None
    none = 0xFFFFFFFF

    chunks = []
    if with_resmap:
        chunks.append(chunk(0x0180, 8, b"", struct.pack("<I", ATTR_LABEL)))
    node_hdr = struct.pack("<II", 1, none)
    chunks.append(chunk(0x0100, 16, node_hdr, struct.pack("<II", android_prefix, android_uri)))

    def start(name_idx, attrs):
        body = struct.pack("<IIHHHHHH", none, name_idx, 20, 20, len(attrs), 0, 0, 0)
        for ns, nm, raw, dtype, data in attrs:
            body += struct.pack("<IIIHBBI", ns, nm, raw, 8, 0, dtype, data)
        return chunk(0x0102, 16, node_hdr, body)

    def end(name_idx):
        return chunk(0x0103, 16, node_hdr, struct.pack("<II", none, name_idx))

    chunks.append(start(manifest_idx, [(none, package_attr, package_val, 0x03, package_val)]))
    app_attrs = []
    if label is not None:
        app_attrs.append((android_uri, label_idx, label_val, 0x03, label_val))
    elif label_ref is not None:
        app_attrs.append((android_uri, label_idx, none, 0x01, label_ref))
    chunks.append(start(app_idx, app_attrs))
    chunks.append(end(app_idx))
    chunks.append(end(manifest_idx))
    chunks.append(chunk(0x0101, 16, node_hdr, struct.pack("<II", android_prefix, android_uri)))

    body = pool.encode() + b"".join(chunks)
    return chunk(0x0003, 8, b"", body)


def config_bytes(language=None):
    cfg = bytearray(64)
    struct.pack_into("<I", cfg, 0, 64)
    if language:
        cfg[8:10] = language.encode()
    return bytes(cfg)


def compile_resources(package, strings_by_config):
    """Resource table with one package (0x7f) and one string type.

    strings_by_config: list of (language or None, [values...]).
    Entry i of type 1 ("string") is value i.
    """
    global_pool = StringPool(utf8=True)
    for _, values in strings_by_config:
        for v in values:
            global_pool.add(v)
    type_pool = StringPool()
    type_pool.add("string")
    key_pool = StringPool(utf8=True)
    n_entries = max(len(v) for _, v in strings_by_config)
    for i in range(n_entries):
        key_pool.add("app_name" if i == 0 else "s%d" % i)

    pkg_name = package.encode("utf-16-le")[:254].ljust(256, b"\x00")
    type_strings = type_pool.encode()
    key_strings = key_pool.encode()
    pkg_header_size = 288

    spec = chunk(0x0202, 16, struct.pack("<BBHI", 1, 0, 0, n_entries), b"\x00" * 4 * n_entries)
    types = b""
    for language, values in strings_by_config:
        cfg = config_bytes(language)
        header_size = 20 + len(cfg)
        offsets = b""
        entries = b""
        for i in range(n_entries):
            if i < len(values):
                offsets += struct.pack("<I", len(entries))
                entries += struct.pack("<HHI", 8, 0, i)
                entries += struct.pack("<HBBI", 8, 0, 0x03, global_pool.strings.index(values[i]))
            else:
                offsets += struct.pack("<I", 0xFFFFFFFF)
        entries_start = header_size + len(offsets)
        rest = struct.pack("<BBHII", 1, 0, 0, n_entries, entries_start) + cfg
        types += chunk(0x0201, header_size, rest, offsets + entries)

    pkg_rest = (
        struct.pack("<I", 0x7F)
        + pkg_name
        + struct.pack(
            "<IIIII",
            pkg_header_size,
            0,
            pkg_header_size + len(type_strings),
            0,
            0,
        )
    )
    pkg = chunk(0x0200, pkg_header_size, pkg_rest, type_strings + key_strings + spec + types)
    return chunk(0x0002, 12, struct.pack("<I", 1), global_pool.encode() + pkg)


# ---------------------------------------------------------------- signing


def sign_bytes(key, data):
    if isinstance(key, rsa.RSAPrivateKey):
        return key.sign(data, padding.PKCS1v15(), hashes.SHA256()), 0x0103
    return key.sign(data, ec.ECDSA(hashes.SHA256())), 0x0201


def pubkey_der(key):
    return key.public_key().public_bytes(
        serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo
    )


def lp(data):
    return struct.pack("<I", len(data)) + data


def lp_seq(items):
    return lp(b"".join(lp(i) for i in items))


def v1_sign(files, signers):
    """Returns META-INF entries for each (cert, key, extra_certs, basename)."""
    manifest = "Manifest-Version: 1.0\r\nCreated-By: fixture\r\n\r\n"
    for fname, data in files:
        digest = base64.b64encode(hashlib.sha256(data).digest()).decode()
        manifest += "Name: %s\r\nSHA-256-Digest: %s\r\n\r\n" % (fname, digest)
    out = [("META-INF/MANIFEST.MF", manifest.encode())]
    for cert, key, extra, base in signers:
        sf = "Signature-Version: 1.0\r\nSHA-256-Digest-Manifest: %s\r\n\r\n" % (
            base64.b64encode(hashlib.sha256(manifest.encode()).digest()).decode()
        )
        builder = pkcs7.PKCS7SignatureBuilder().set_data(sf.encode()).add_signer(
            cert, key, hashes.SHA256()
        )
        for c in extra:
            builder = builder.add_certificate(c)
        sig = builder.sign(
            serialization.Encoding.DER,
            [pkcs7.PKCS7Options.DetachedSignature, pkcs7.PKCS7Options.NoAttributes],
        )
        ext = "RSA" if isinstance(key, rsa.RSAPrivateKey) else "EC"
        out.append(("META-INF/%s.SF" % base, sf.encode()))
        out.append(("META-INF/%s.%s" % (base, ext), sig))
    return out


def v2_signer(cert, key, chain=()):
    # content digests are not verified by the extractor; a fixed placeholder keeps
    # the layout realistic without reimplementing chunked digests.
    digests = [struct.pack("<I", 0x0103) + lp(hashlib.sha256(b"placeholder").digest())]
    certs = [der(cert)] + [der(c) for c in chain]
    signed_data = lp_seq(digests) + lp_seq(certs) + lp_seq([])
    sig, alg = sign_bytes(key, signed_data)
    return lp(signed_data) + lp_seq([struct.pack("<I", alg) + lp(sig)]) + lp(pubkey_der(key))


def lineage_attr(nodes):
    """nodes: [(cert, key)] oldest first. Each node is signed by its parent."""
    body = struct.pack("<I", 1)
    parent_key = None
    for cert, key in nodes:
        _, alg = sign_bytes(key, b"x")
        signed = lp(der(cert)) + struct.pack("<I", alg)
        if parent_key is None:
            sig = b""
        else:
            sig, _ = sign_bytes(parent_key, signed)
        body += lp(lp(signed) + struct.pack("<I", 0) + struct.pack("<I", alg) + lp(sig))
        parent_key = key
    return struct.pack("<I", 0x3BA06F8C) + body


def v3_signer(cert, key, lineage=None, min_sdk=28, max_sdk=0x7FFFFFFF):
    digests = [struct.pack("<I", 0x0103) + lp(hashlib.sha256(b"placeholder").digest())]
    attrs = [lineage_attr(lineage)] if lineage else []
    signed_data = (
        lp_seq(digests)
        + lp_seq([der(cert)])
        + struct.pack("<II", min_sdk, max_sdk)
        + lp_seq(attrs)
    )
    sig, alg = sign_bytes(key, signed_data)
    return (
        lp(signed_data)
        + struct.pack("<II", min_sdk, max_sdk)
        + lp_seq([struct.pack("<I", alg) + lp(sig)])
        + lp(pubkey_der(key))
    )


def signing_block(pairs):
    body = b""
    for block_id, value in pairs:
        body += struct.pack("<QI", len(value) + 4, block_id) + value
    size = len(body) + 8 + 16
    return struct.pack("<Q", size) + body + struct.pack("<Q", size) + b"APK Sig Block 42"


def build_zip(entries):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for fname, data in entries:
            info = zipfile.ZipInfo(fname, date_time=(2020, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_STORED if fname.endswith(".arsc") else zipfile.ZIP_DEFLATED
            zf.writestr(info, data)
    return buf.getvalue()


def insert_signing_block(apk, block):
    eocd = apk.rfind(b"PK\x05\x06")
    cd_offset = struct.unpack_from("<I", apk, eocd + 16)[0]
    new_eocd = bytearray(apk[eocd:])
    struct.pack_into("<I", new_eocd, 16, cd_offset + len(block))
    return apk[:cd_offset] + block + apk[cd_offset:eocd] + bytes(new_eocd)


# ---------------------------------------------------------------- fixtures


def cert_expect(cert, schemes):
    return {
        "fingerprint_sha256": fingerprint(cert),
        "subject": subject_fields(cert.subject),
        "issuer": subject_fields(cert.issuer),
        "self_signed": cert.subject.public_bytes() == cert.issuer.public_bytes(),
        "schemes": sorted(schemes),
    }


def make_apk(name_, package, label=None, label_ref=None, resources=None, v1=(), v2=(), v3=(),
             utf8=False):
    files = [("AndroidManifest.xml", compile_manifest(package, label, label_ref, utf8=utf8)),
             ("classes.dex", b"dex\n035\x00" + os.urandom(64))]
    if resources is not None:
        files.append(("resources.arsc", resources))
    entries = list(files)
    if v1:
        entries += v1_sign(files, v1)
    apk = build_zip(entries)
    pairs = []
    if v2:
        pairs.append((0x7109871A, lp_seq([v2_signer(*s) for s in v2])))
    if v3:
        pairs.append((0xF05368C0, lp_seq([v3_signer(**s) for s in v3])))
    if pairs:
        pairs.append((0x42726577, b"\x00" * 12))
        apk = insert_signing_block(apk, signing_block(pairs))
    path = os.path.join(APK_DIR, name_ + ".apk")
    with open(path, "wb") as fh:
        fh.write(apk)
    return hashlib.sha256(apk).hexdigest()


def main():
    os.makedirs(APK_DIR, exist_ok=True)
    expected = {}

    k_android = rsa_key()
    c_android = make_cert(name(cn="Android"), k_android)
    k_dev = rsa_key()
    c_dev = make_cert(name(cn="Jane Dev", o="Example Apps", ou="Mobile", l="Madrid", st="Madrid", c="ES"), k_dev)
    k_ec = ec_key()
    c_ec = make_cert(name(cn="Example EC", o="Example Apps", c="NL"), k_ec)
    k_old = rsa_key()
    c_old = make_cert(name(cn="Rotating Old", o="Rotor Ltd"), k_old)
    k_new = rsa_key()
    c_new = make_cert(name(cn="Rotating New", o="Rotor Ltd"), k_new)
    k_ca = rsa_key()
    c_ca = make_cert(name(cn="Example Issuing CA", o="Example Trust"), k_ca)
    k_leaf = rsa_key()
    c_leaf = make_cert(name(cn="Second Signer", o="Partner Co", c="DE"), k_leaf,
                       issuer=c_ca.subject, issuer_key=k_ca)
    k_play = rsa_key()
    c_play = make_cert(name(cn="Google Inc.", o="Google Inc.", ou="Android", l="Mountain View",
                            st="California", c="US"), k_play)

    def record(name_, sha, package, label, certs, signer_count, warnings):
        expected[name_] = {
            "apk_sha256": sha,
            "package_name": package,
            "app_name_manifest": label,
            "certificates": sorted(certs, key=lambda c: c["fingerprint_sha256"]),
            "signer_count": signer_count,
            "warnings": warnings,
        }

    sha = make_apk("v1_only", "com.example.app", label="Example", v1=[(c_android, k_android, [], "CERT")])
    record("v1_only", sha, "com.example.app", "Example", [cert_expect(c_android, ["V1"])], 1, [])

    sha = make_apk("v2_only", "com.example.vtwo", label="Example Two", v2=[(c_ec, k_ec)], utf8=True)
    record("v2_only", sha, "com.example.vtwo", "Example Two", [cert_expect(c_ec, ["V2"])], 1, [])

    sha = make_apk("v1_v2", "com.example.both", label="Both Schemes",
                   v1=[(c_dev, k_dev, [], "CERT")], v2=[(c_dev, k_dev)])
    record("v1_v2", sha, "com.example.both", "Both Schemes", [cert_expect(c_dev, ["V1", "V2"])], 1, [])

    # same key as v1_only but with v2 added: identical fingerprint, schemes grow
    sha = make_apk("v1_v2_same_key", "com.example.app", label="Example",
                   v1=[(c_android, k_android, [], "CERT")], v2=[(c_android, k_android)])
    record("v1_v2_same_key", sha, "com.example.app", "Example",
           [cert_expect(c_android, ["V1", "V2"])], 1, [])

    res = compile_resources("com.example.rotate", [(None, ["Rotor"]), ("fr", ["Rotateur"])])
    sha = make_apk("v3_rotation", "com.example.rotate", label_ref=0x7F010000, resources=res,
                   v1=[(c_old, k_old, [], "CERT")], v2=[(c_old, k_old)],
                   v3=[{"cert": c_new, "key": k_new, "lineage": [(c_old, k_old), (c_new, k_new)]}])
    record("v3_rotation", sha, "com.example.rotate", "Rotor",
           [cert_expect(c_old, ["V1", "V2", "V3"]), cert_expect(c_new, ["V3"])], 1, [])

    sha = make_apk("two_signers", "com.example.pair", label="Pair",
                   v1=[(c_dev, k_dev, [], "ALPHA"), (c_leaf, k_leaf, [c_ca], "BETA")],
                   v2=[(c_dev, k_dev), (c_leaf, k_leaf, [c_ca])])
    record("two_signers", sha, "com.example.pair", "Pair",
           [cert_expect(c_dev, ["V1", "V2"]), cert_expect(c_leaf, ["V1", "V2"])], 2, [])

    sha = make_apk("unsigned", "com.example.unsigned", label="Unsigned")
    record("unsigned", sha, "com.example.unsigned", "Unsigned", [], 0, ["unsigned"])

    sha = make_apk("label_ref_unresolved", "com.example.app", label_ref=0x7F010000,
                   v1=[(c_android, k_android, [], "CERT")])
    record("label_ref_unresolved", sha, "com.example.app", None,
           [cert_expect(c_android, ["V1"])], 1, ["unresolved-resource"])

    sha = make_apk("label_ref_resolved", "com.example.app", label_ref=0x7F010000,
                   resources=compile_resources("com.example.app", [(None, ["My App"])]),
                   v2=[(c_ec, k_ec)])
    record("label_ref_resolved", sha, "com.example.app", "My App", [cert_expect(c_ec, ["V2"])], 1, [])

    sha = make_apk("play_signed", "com.example.play", label="Played", v1=[(c_play, k_play, [], "CERT")],
                   v2=[(c_play, k_play)])
    record("play_signed", sha, "com.example.play", "Played", [cert_expect(c_play, ["V1", "V2"])], 1, [])

    # v1 and v2 disagree
    sha = make_apk("scheme_mismatch", "com.example.mismatch", label="Mismatch",
                   v1=[(c_android, k_android, [], "CERT")], v2=[(c_dev, k_dev)])
    record("scheme_mismatch", sha, "com.example.mismatch", "Mismatch",
           [cert_expect(c_android, ["V1"]), cert_expect(c_dev, ["V2"])], 1,
           ["cross-scheme-mismatch"])

    # raw manifests and the resource table for parser-level tests
    with open(os.path.join(HERE, "manifest_literal.axml"), "wb") as fh:
        fh.write(compile_manifest("com.example.app", label="Example"))
    with open(os.path.join(HERE, "manifest_ref.axml"), "wb") as fh:
        fh.write(compile_manifest("com.example.app", label_ref=0x7F010000))
    with open(os.path.join(HERE, "resources_my_app.arsc"), "wb") as fh:
        fh.write(compile_resources("com.example.app", [("de", ["Meine App"]), (None, ["My App"])]))

    # standalone certificates
    certs = []
    with open(os.path.join(HERE, "android_cn.der"), "wb") as fh:
        fh.write(der(c_android))
    with open(os.path.join(HERE, "ca_issued.der"), "wb") as fh:
        fh.write(der(c_leaf))
    for i in range(100):
        key = ec_key()
        fields = {"cn": "Fixture %d" % i}
        if i % 2 == 0:
            fields["o"] = "Org %d" % (i % 7)
        if i % 3 == 0:
            fields["c"] = ["US", "ES", "AT", "CN"][i % 4]
        if i % 5 == 0:
            fields["l"] = "Город %d" % i
        c = make_cert(name(**fields), key)
        d = der(c)
        certs.append({
            "der_b64": base64.b64encode(d).decode(),
            "sha256": openssl_sha256(d),
            "subject": subject_fields(c.subject),
        })
    with open(os.path.join(HERE, "certs_100.json"), "w") as fh:
        json.dump(certs, fh, indent=1, ensure_ascii=False)
        fh.write("\n")

    with open(os.path.join(HERE, "expected.json"), "w") as fh:
        json.dump(expected, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


if __name__ == "__main__":
    main()
