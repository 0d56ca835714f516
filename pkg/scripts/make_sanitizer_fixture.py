#!/usr/bin/env python3
"""Build the 100-record PII fixture with construction-time ground truth.

Every planted redaction is counted while the record is assembled, so the
truth file reflects what was inserted, independent of what the sanitizer
later finds.  Regenerating overwrites tests/fixtures/sanitizer_records.jsonl
and sanitizer_truth.json.
"""

import json
import random
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

FILLER = [
    "the export dialog keeps the aspect ratio",
    "select the layer and drag it onto the canvas",
    "our team reviewed the workflow last week",
    "the preset library loads after a short delay",
    "use the crop tool from the left panel",
    "rendering finishes once the queue is empty",
    "the shared workspace syncs when you reconnect",
    "masking works best on high contrast footage",
]

EMAILS = [
    "mia.wong@example.com",
    "support@vendor.io",
    "billing+team@corp.co.uk",
    "j.doe@mail.example.org",
]

PHONES = [
    "+1 (555) 123-4567",
    "(555) 123-4567",
    "555-123-4567",
    "555.123.4567",
    "+44 20 7946 0958",
    "+91-9876543210",
    "1-800-555-0199",
    "+33 1 42 68 53 00",
    "0151 496 0705",
    "+49 30 901820",
]

# Detected by the dictionary NER provider in tests.
PERSONS = ["Alice Johnson", "Bob Mercer", "Carol Finch", "Dmitri Volkov", "Erin Walsh"]

# Deliberately NOT in the dictionary: signature name lines are consumed by
# the regex layer before NER ever runs.
SIGNATURE_NAMES = ["Sam Taylor", "Lee Moreno", "Pat Quinn"]
CLOSERS = ["Regards", "Thanks", "Best"]


def main():
    rng = random.Random(20240601)
    records = []
    truth = {"email": 0, "phone": 0, "signature": 0, "person": 0}
    for i in range(100):
        title_parts = [rng.choice(FILLER)]
        body_lines = [rng.choice(FILLER), rng.choice(FILLER)]

        if rng.random() < 0.40:
            body_lines.insert(1, f"contact {rng.choice(EMAILS)} for access")
            truth["email"] += 1
        if rng.random() < 0.15:
            title_parts.append(f"written by {rng.choice(EMAILS)}")
            truth["email"] += 1
        if rng.random() < 0.35:
            body_lines.insert(0, f"call {rng.choice(PHONES)} during office hours")
            truth["phone"] += 1
        if rng.random() < 0.50:
            body_lines.append(f"{rng.choice(PERSONS)} verified the steps above")
            truth["person"] += 1
        if rng.random() < 0.30:
            body_lines.append(f"{rng.choice(CLOSERS)},")
            body_lines.append(rng.choice(SIGNATURE_NAMES))
            truth["signature"] += 1

        records.append(
            {
                "record_id": f"r{i:03d}",
                "title": " ".join(title_parts),
                "body": "\n".join(body_lines),
                "untouched": "this field is never scrubbed 12345",
            }
        )

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "sanitizer_records.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    (OUT_DIR / "sanitizer_truth.json").write_text(
        json.dumps({"counts": truth, "processed": 100, "skipped": 0}, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    (OUT_DIR / "person_names.txt").write_text("\n".join(PERSONS) + "\n", encoding="utf-8")
    print(f"wrote 100 records, truth: {truth}")


if __name__ == "__main__":
    main()
