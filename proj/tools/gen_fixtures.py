#!/usr/bin/env python3
"""Regenerates the packaged fixtures under fixtures/.

The guitar tree mirrors the shape used throughout the docs: 35 top-level
categories, a kept branch with 16 children, a kept grandchild with 13
children, three of which are the surviving leaves. The camera tree exercises
context-conditioned scoring. Embeddings are synthetic unit vectors with
hand-picked cosines against the packaged query so nearest-neighbor order is
known by construction.
"""

import json
import math
import os
import random

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")

LEVEL1 = [
    "Antiques", "Art", "Baby", "Books & Magazines", "Business & Industrial",
    "Cameras & Photo", "Cell Phones & Accessories", "Clothing, Shoes & Accessories",
    "Coins & Paper Money", "Collectibles", "Computers, Tablets & Networking",
    "Consumer Electronics", "Crafts", "Dolls & Bears", "Entertainment Memorabilia",
    "Everything Else", "Gift Cards & Coupons", "Health & Beauty", "Home & Garden",
    "Jewelry & Watches", "Motors", "Movies & TV", "Music", "Musical Instruments & Gear",
    "Pet Supplies", "Pottery & Glass", "Real Estate", "Specialty Services",
    "Sporting Goods", "Sports Memorabilia & Fan Shop", "Stamps",
    "Tickets & Experiences", "Toys & Hobbies", "Travel", "Video Games & Consoles",
]

MIG_CHILDREN = [
    "Brass", "DJ Equipment", "Drums & Percussion", "Electronic Keyboards",
    "Guitars & Basses", "Harmonicas", "Karaoke Entertainment", "Pianos",
    "Pro Audio Equipment", "Sheet Music & Song Books", "Stage Lighting & Effects",
    "String Instruments", "Vintage Musical Instruments", "Wind & Woodwind",
    "Other Musical Instruments", "Instruction Books, CDs & Video",
]

GB_CHILDREN = [
    "Acoustic Electric Guitars", "Acoustic Guitars", "Banjos", "Bass Guitars",
    "Classical Guitars", "Electric Guitars", "Guitar Amplifiers",
    "Guitar Builder/Luthier Supply", "Lap & Pedal Steel Guitars", "Mandolins",
    "Parts & Accessories", "Travel Guitars", "Ukuleles",
]

assert len(LEVEL1) == 35 and len(MIG_CHILDREN) == 16 and len(GB_CHILDREN) == 13


def write_jsonl(name, records):
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(records)} lines)")


def node(nid, parent, name=None, description=None):
    return {"id": nid, "parent_id": parent, "name": name or nid, "description": description}


def guitar_tree():
    records = [node("AllCats", None, description="Root of the category tree")]
    for name in LEVEL1:
        desc = None
        if name == "Musical Instruments & Gear":
            desc = "Instruments, accessories and gear for making music"
        elif name == "Music":
            desc = "Recorded music: records, CDs, cassettes and digital"
        records.append(node(name, "AllCats", description=desc))
    for name in MIG_CHILDREN:
        desc = "Guitars, basses and related equipment" if name == "Guitars & Basses" else None
        records.append(node(name, "Musical Instruments & Gear", description=desc))
    for name in GB_CHILDREN:
        desc = None
        if name == "Acoustic Guitars":
            desc = "Hollow-bodied guitars played unamplified"
        elif name == "Acoustic Electric Guitars":
            desc = "Acoustic guitars with built-in pickups"
        elif name == "Classical Guitars":
            desc = "Nylon-string guitars in the classical tradition"
        records.append(node(name, "Guitars & Basses", description=desc))
    return records


def padded_guitar_tree():
    records = guitar_tree()
    pruned_level1 = [n for n in LEVEL1 if n != "Musical Instruments & Gear"]
    total_nonroot = 500
    extra = total_nonroot - (len(records) - 1)
    for i in range(extra):
        parent = pruned_level1[i % len(pruned_level1)]
        nid = f"{parent} Item {i // len(pruned_level1) + 1}"
        records.append(node(nid, parent))
    assert len(records) == total_nonroot + 1
    return records


def guitar_mock():
    q = "acoustic guitar"
    entries = [
        {"query": q, "node_id": "Musical Instruments & Gear", "score": 10},
        {"query": q, "node_id": "Music", "score": 4},
        {"query": q, "node_id": "Guitars & Basses", "score": 10},
        {"query": q, "node_id": "Acoustic Guitars", "score": 10},
        {"query": q, "node_id": "Classical Guitars", "score": 9},
        {"query": q, "node_id": "Acoustic Electric Guitars", "score": 9},
    ]
    path = os.path.join(OUT, "fig2_mock.json")
    with open(path, "w") as f:
        json.dump({"default": 1, "entries": entries}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {path}")


DIM = 8


def unit_with_cosine(target, rng):
    """A unit vector whose cosine against e0 is exactly `target`."""
    rest = [rng.uniform(-1.0, 1.0) for _ in range(DIM - 1)]
    norm = math.sqrt(sum(x * x for x in rest))
    scale = math.sqrt(max(0.0, 1.0 - target * target)) / norm
    vec = [target] + [x * scale for x in rest]
    return [round(x, 6) for x in vec]


def guitar_embeddings():
    rng = random.Random(91)
    targets = {"AllCats": 0.30, "Musical Instruments & Gear": 0.95, "Music": 0.80,
               "Guitars & Basses": 0.93, "Acoustic Guitars": 0.97,
               "Acoustic Electric Guitars": 0.92, "Classical Guitars": 0.90}
    others = [n for n in LEVEL1 if n not in targets]
    for i, name in enumerate(others):
        targets[name] = round(0.05 + 0.019 * i, 4)
    rest2 = [n for n in MIG_CHILDREN if n not in targets]
    for i, name in enumerate(rest2):
        targets[name] = round(0.03 + 0.037 * i, 4)
    rest3 = [n for n in GB_CHILDREN if n not in targets]
    for i, name in enumerate(rest3):
        targets[name] = round(0.04 + 0.048 * i, 4)

    records = []
    for rec in guitar_tree():
        records.append({"id": rec["id"], "vector": unit_with_cosine(targets[rec["id"]], rng)})
    write_jsonl("fig2_embeddings.jsonl", records)

    query_vec = [1.0] + [0.0] * (DIM - 1)
    write_jsonl("fig2_query_embeddings.jsonl", [{"id": "acoustic guitar", "vector": query_vec}])


CAMERA_LEVEL1 = ["Antiques", "Art", "Baby", "Books & Magazines", "Cameras & Photo",
                 "Crafts", "Motors", "Travel"]
CAMERA_CHILDREN = ["Digital Cameras", "Camera, Drone & Photo Accessories",
                   "Flashes & Flash Accessories", "Camera Lenses", "Tripods & Supports",
                   "Camcorders", "Binoculars & Telescopes", "Film Photography"]
ACCESSORY_CHILDREN = ["Accessory Bundles", "Camera Batteries", "Camera Cases, Bags & Covers",
                      "Memory Cards", "Camera Straps", "Lens Adapters"]
FLASH_CHILDREN = ["Other Flashes & Flash Accs", "Flash Brackets", "Flash Diffusers",
                  "Studio Flash Units", "Flash Cables", "Flash Adapters"]


def camera_tree():
    records = [node("AllCats", None)]
    for name in CAMERA_LEVEL1:
        records.append(node(name, "AllCats"))
    for name in CAMERA_CHILDREN:
        records.append(node(name, "Cameras & Photo"))
    for name in ACCESSORY_CHILDREN:
        records.append(node(name, "Camera, Drone & Photo Accessories"))
    for name in FLASH_CHILDREN:
        records.append(node(name, "Flashes & Flash Accessories"))
    return records


def camera_mock():
    q = "canon camera"
    acc = "intent:seeking accessories"
    entries = [
        {"query": q, "node_id": "Cameras & Photo", "score": 10},
        {"query": q, "node_id": "Digital Cameras", "score": 10},
        {"query": q, "node_id": "Camera, Drone & Photo Accessories", "score": 2},
        {"query": q, "node_id": "Flashes & Flash Accessories", "score": 2},
        {"query": q, "node_id": "Cameras & Photo", "context": acc, "score": 10},
        {"query": q, "node_id": "Digital Cameras", "context": acc, "score": 1},
        {"query": q, "node_id": "Camera, Drone & Photo Accessories", "context": acc, "score": 9},
        {"query": q, "node_id": "Flashes & Flash Accessories", "context": acc, "score": 9},
        {"query": q, "node_id": "Accessory Bundles", "context": acc, "score": 9},
        {"query": q, "node_id": "Other Flashes & Flash Accs", "context": acc, "score": 9},
    ]
    path = os.path.join(OUT, "intent_mock.json")
    with open(path, "w") as f:
        json.dump({"default": 1, "entries": entries}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {path}")


def main():
    os.makedirs(OUT, exist_ok=True)
    write_jsonl("fig2_taxonomy.jsonl", guitar_tree())
    write_jsonl("fig2_padded_taxonomy.jsonl", padded_guitar_tree())
    guitar_mock()
    guitar_embeddings()
    write_jsonl("intent_taxonomy.jsonl", camera_tree())
    camera_mock()
    write_jsonl("fig2_queries.jsonl",
                [{"query_id": "acoustic guitar", "query": "acoustic guitar"}])


if __name__ == "__main__":
    main()
