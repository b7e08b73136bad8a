"""Regenerate the bundled data files under crates/core/data/.

Everything here is deterministic. The dictionary is a reconstruction:
entry ids, titles and URLs are synthetic, only its size (280 designs over
52 object classes) and the label scheme are kept.
The two count fixtures reproduce the reference per-class object counts with
random, valid boxes.

    python3 scripts/gen_data.py
"""

import json
import random
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "data"
FIX = DATA / "fixtures"

CLASSES = [
    "button_panel_push_buttons", "button_panel_turn_handle", "electric_outlet",
    "faucet_faucet_only", "faucet_handle_lever", "faucet_pull_tiny_knob",
    "faucet_rotate_cross", "faucet_rotate_knob", "handle_bar_large",
    "handle_bar_small", "handle_cup_handle", "handle_drop_pull",
    "handle_flush_pull", "handle_lever", "handle_pull", "knob_rotate_round",
    "knob_static", "switch_rocker_multi", "switch_rocker_single",
    "switch_toggle_multi", "switch_toggle_single", "unidentifiable",
]
PARENTS = ["button_panel"] * 2 + ["electric_outlet"] + ["faucet"] * 5 + ["handle"] * 7 \
    + ["knob"] * 2 + ["switch"] * 4 + [None]

ACCESSDB = [83, 165, 1382, 169, 351, 29, 86, 96, 375, 1712, 243, 491, 43, 211,
            289, 205, 3026, 84, 57, 103, 115, 724]
ACCESSREAL = [14, 8, 33, 3, 13, 0, 0, 0, 19, 191, 31, 0, 0, 10, 14, 26, 38, 3,
              4, 8, 13, 0]


def categories():
    out = []
    for i, (name, parent) in enumerate(zip(CLASSES, PARENTS), start=1):
        c = {"id": i, "name": name}
        if parent:
            c["supercategory"] = parent
        out.append(c)
    return out


def count_fixture(counts, n_images, sizes, seed, prefix):
    rng = random.Random(seed)
    images = []
    for i in range(1, n_images + 1):
        w, h = rng.choice(sizes)
        images.append({"id": i, "file_name": f"{prefix}_{i:05d}.jpg", "width": w, "height": h})
    anns = []
    aid = 1
    for cls, n in enumerate(counts, start=1):
        for _ in range(n):
            img = images[rng.randrange(n_images)]
            bw = rng.randint(4, max(5, img["width"] // 6))
            bh = rng.randint(4, max(5, img["height"] // 6))
            x = rng.randint(0, img["width"] - bw)
            y = rng.randint(0, img["height"] - bh)
            anns.append({"id": aid, "image_id": img["id"], "category_id": cls,
                         "bbox": [x, y, bw, bh]})
            aid += 1
    return {"images": images, "annotations": anns, "categories": categories()}


def write_compact(path, doc):
    # One record per line keeps diffs readable without pretty-printing 10k rows.
    lines = ["{"]
    for k, key in enumerate(["images", "annotations", "categories"]):
        lines.append(f'"{key}": [')
        rows = [json.dumps(r, separators=(", ", ": ")) for r in doc[key]]
        lines.append(",\n".join(rows))
        lines.append("]" + ("," if k < 2 else ""))
    lines.append("}")
    path.write_text("\n".join(lines) + "\n")


# --- dictionary -------------------------------------------------------------

OBJECTS = [
    ("switch", ["light switch", "light_switch", "wall switch"], "Light Switch", 26),
    ("outlet", ["electric outlet", "electric_outlet", "socket", "power outlet"], "Outlet", 14),
    ("handle", ["door handle", "drawer handle", "pull"], "Handle", 14),
    ("door", ["doorknob"], "Door", 14),
    ("knob", ["door knob", "cabinet knob"], "Knob", 14),
    ("faucet", ["tap", "water faucet"], "Faucet", 14),
    ("button_panel", ["button panel", "control panel"], "Button Panel", 8),
    ("stove", ["cooktop", "range"], "Stove", 8),
    ("drawer", [], "Drawer", 10),
    ("cabinet", ["cupboard door"], "Cabinet", 10),
    ("cupboard", [], "Cupboard", 5),
    ("closet", ["wardrobe"], "Closet", 4),
    ("microwave", [], "Microwave", 6),
    ("table", ["desk"], "Table", 5),
    ("book", [], "Book", 4),
    ("nail_clipper", ["nail clipper"], "Nail Clipper", 4),
    ("knife", [], "Knife", 4),
    ("hair_dryer", ["hair dryer"], "Hair Dryer", 4),
    ("utensil", ["cutlery"], "Utensil", 5),
    ("spoon", [], "Spoon", 4),
    ("fork", [], "Fork", 3),
    ("bottle", [], "Bottle", 6),
    ("jar", [], "Jar", 5),
    ("bag", ["ziploc bag"], "Bag", 4),
    ("key", [], "Key", 5),
    ("soap_dispenser", ["soap dispenser", "dispenser"], "Soap Dispenser", 4),
    ("shampoo", ["shampoo bottle"], "Shampoo Bottle", 3),
    ("can", ["soda can"], "Can", 4),
    ("pen", ["pencil"], "Pen", 4),
    ("spray", ["spray bottle"], "Spray Bottle", 3),
    ("phone", ["smartphone"], "Phone", 4),
    ("laptop", [], "Laptop", 3),
    ("camera", [], "Camera", 3),
    ("toothbrush", [], "Toothbrush", 4),
    ("toothpaste", ["toothpaste tube"], "Toothpaste", 3),
    ("clock", [], "Clock", 3),
    ("sock", ["socks"], "Sock", 2),
    ("shoe", ["shoes"], "Shoe", 3),
    ("shirt", ["shirt button"], "Shirt", 2),
    ("milk_carton", ["milk carton"], "Milk Carton", 3),
    ("window_blind", ["window blind", "blinds"], "Window Blind", 3),
    ("chair", ["office chair"], "Chair", 3),
    ("washing_machine", ["washing machine", "washer"], "Washing Machine", 4),
    ("remote_control", ["remote control", "remote"], "Remote Control", 4),
    ("cup", ["mug"], "Cup", 4),
    ("plate", ["dish"], "Plate", 3),
    ("sofa", ["couch"], "Sofa", 3),
    ("zipper", [], "Zipper", 3),
    ("refrigerator", ["fridge"], "Fridge", 5),
    ("toilet", [], "Toilet", 4),
    ("lamp", [], "Lamp", 3),
    ("window", [], "Window", 4),
]

AO, AR, C, IV, IT = ("actuation-operation", "actuation-reach", "constraint",
                     "indication-visual", "indication-tactile")

TEMPLATES = {
    AR: ["{O} Extension", "Long Reach {O} Grip", "Wall Mount for {O}", "{O} Holder",
         "Easy Reach {O} Extension Arm", "{O} Grip Enlarger"],
    AO: ["{O} Lever Extension", "Hands-free {O} Opener", "Arm Pull {O} Hand Extension",
         "One-handed {O} Opener", "{O} String Extension Pull"],
    C: ["{O} Cover", "Child-proof {O} Lock", "{O} Guard", "{O} Protector", "Safety {O} Cover"],
    IV: ["{O} Label", "Color-coded {O} Tag", "{O} Identifier Plate", "Large Print {O} Label"],
    IT: ["Braille {O} Label", "Tactile {O} Identifier", "Raised-dot {O} Tag"],
}
PHRASE = {AO: "alternative operation", AR: "easier reach", C: "limited access",
          IV: "visual cue", IT: "tactile cue"}
ROTATION = [AR, C, AO, IV, IT, AR, C, AO]

# Hand-picked entries: the three switch designs shown in the suggestion flow,
# examples named in the scenario walkthroughs, and designs whose wording does
# not carry a catalogue keyword (or carries a misleading one).
SPECIAL = [
    ("Light Switch Extension", ["switch"], [AR], ["switch", "reach", "kids"]),
    ("Light Switch Plate Identifier", ["switch"], [IT], ["switch", "tactile", "braille"]),
    ("Light Switch Protective Cover", ["switch"], [C], ["switch", "safety", "child"]),
    ("Gear Light Switch Extension", ["switch"], [AR], ["switch", "gear"]),
    ("Tactile Switch Cover with Label", ["switch"], [C, IT], ["switch", "tactile"]),
    ("Switch Plate Sticker Set", ["switch"], [IV], ["switch", "sticker"]),
    ("Door Knob Lever Extension", ["knob", "door"], [AO], ["doorknob", "lever"]),
    ("Door Lever Arm Hand Extension", ["handle", "door"], [AO], ["door", "arm"]),
    ("Hands-free Door Opener", ["door"], [AO], ["foot", "hands free"]),
    ("Knob Cover Grip", ["knob"], [AR], ["knob", "grip"]),
    ("Stove Knob Protector", ["stove", "knob"], [C], ["child safety", "stove"]),
    ("Washing Machine Button Cover", ["washing_machine", "button_panel"], [C], ["child safety"]),
    ("Microwave Door Opener", ["microwave"], [AO], ["microwave"]),
    ("Microwave Button Pusher", ["microwave", "button_panel"], [AO], ["microwave", "elbow"]),
    ("Drawer Finger Protector", ["drawer"], [C], ["child", "finger"]),
    ("Table Corner Bumper", ["table"], [C], ["corner", "bumper"]),
    ("Window Blind Cord Hanger", ["window_blind"], [C], ["cord", "safety"]),
    ("Chair Wheel Stopper", ["chair"], [C], ["office", "wheel"]),
    ("Sock Aid", ["sock"], [AO], ["dressing aid"]),
    ("Button Hook for One-Handed Dressing", ["shirt"], [AO], ["dressing aid"]),
    ("Extended Shoe Horn", ["shoe"], [AR], ["dressing aid"]),
    ("Toothpaste Squeezer", ["toothpaste"], [AO], ["bathroom"]),
    ("Jar Twister", ["jar"], [AO], ["kitchen", "wrist"]),
    ("Milk Carton Opener", ["milk_carton"], [AO], ["kitchen", "wrist"]),
    ("Plastic Bottle Opener", ["bottle"], [AO], ["kitchen", "leverage"]),
    ("Bottle Pump Dispenser", ["bottle", "soap_dispenser"], [AO], ["one hand"]),
    ("Key Turner", ["key"], [AO], ["arthritis"]),
    ("Pen Ball Aid", ["pen"], [AO], ["art", "wrist"]),
    ("Utensil Clamp", ["utensil", "spoon", "fork"], [AO], ["eating aid"]),
    ("Hands-free Book Holder", ["book"], [AO], ["reading"]),
    ("Book Page Turner", ["book"], [AO], ["reading"]),
    ("Ziploc Bag Holder", ["bag"], [AO], ["kitchen"]),
    ("Sofa Cup Holder", ["sofa", "cup"], [AO], ["living room"]),
    ("Spray Bottle Trigger Assist", ["spray"], [AO], ["cleaning"]),
    ("Phone Stand", ["phone"], [AR], ["desk"]),
    ("Laptop Lid Lifter", ["laptop"], [AO], ["desk"]),
    ("Camera Shutter Button Extender", ["camera"], [AR], ["photography"]),
    ("Zipper Pull Tag", ["zipper"], [AO], ["dressing aid"]),
    ("Key Cover Identifier", ["key"], [IV], ["color"]),
    ("Faucet Knob Extension", ["faucet"], [AO], ["push", "wrist"]),
    ("Cabinet Label", ["cabinet", "drawer"], [IV], ["organization", "large text"]),
    ("Drawer Lock", ["drawer", "cabinet"], [C], ["child safety"]),
]


def make_dictionary():
    designs = []

    def add(title, objects, labels, tags, description=None):
        i = len(designs) + 1
        did = f"recon-{i:04d}"
        phrase = " and ".join(PHRASE[l] for l in labels)
        designs.append({
            "design_id": did,
            "title": title,
            "description": description or f"3D-printable augmentation providing {phrase}.",
            "tags": ["assistive"] + tags,
            "target_objects": objects,
            "labels": labels,
            "source_url": f"https://example.org/accesslens/designs/{did}",
        })

    per_object = {name: 0 for name, *_ in OBJECTS}
    for title, objs, labels, tags in SPECIAL:
        add(title, objs, labels, tags)
        for o in objs:
            per_object[o] += 1

    counters = {k: 0 for k in TEMPLATES}
    for name, _aliases, display, target in OBJECTS:
        k = 0
        while per_object[name] < target:
            label = ROTATION[(k + len(name)) % len(ROTATION)]
            tmpl = TEMPLATES[label][counters[label] % len(TEMPLATES[label])]
            counters[label] += 1
            tags = [name.replace("_", " ")]
            if label == IT:
                tags.append("tactile")
            add(tmpl.format(O=display), [name], [label], tags)
            per_object[name] += 1
            k += 1

    assert len(designs) == 280, len(designs)
    objects = [{"name": n, "aliases": a} for n, a, _, _ in OBJECTS]
    assert len(objects) == 52
    return {
        "version": "reconstruction-1",
        "objects": objects,
        "designs": designs,
    }


MAPPING = {}
for name, parent in zip(CLASSES, PARENTS):
    if parent is None:
        continue
    MAPPING[name] = {
        "switch": ["switch"],
        "electric_outlet": ["outlet"],
        "handle": ["handle", "door"],
        "faucet": ["faucet"],
        "knob": ["knob"],
        "button_panel": ["button_panel", "stove"],
    }[parent]


def scene_fixture():
    images = [
        {"id": 1, "file_name": "switch_wall.png", "width": 320, "height": 240, "scene": "hallway"},
        {"id": 2, "file_name": "bathroom.png", "width": 320, "height": 240, "scene": "bathroom"},
        {"id": 3, "file_name": "empty_wall.png", "width": 160, "height": 120},
    ]
    anns = [
        {"id": 1, "image_id": 1, "category_id": 20, "bbox": [140, 90, 40, 60]},
        {"id": 2, "image_id": 2, "category_id": 3, "bbox": [20, 100, 30, 40]},
        {"id": 3, "image_id": 2, "category_id": 5, "bbox": [200, 60, 60, 30]},
        {"id": 4, "image_id": 2, "category_id": 22, "bbox": [290, 10, 6, 6]},
    ]
    return {"images": images, "annotations": anns, "categories": categories()}


def draw_images(scene):
    colors = {20: (230, 230, 210), 3: (240, 240, 240), 5: (180, 180, 190), 22: (90, 90, 90)}
    for img in scene["images"]:
        im = Image.new("RGB", (img["width"], img["height"]), (205, 190, 160))
        d = ImageDraw.Draw(im)
        for a in scene["annotations"]:
            if a["image_id"] == img["id"]:
                x, y, w, h = a["bbox"]
                d.rectangle([x, y, x + w - 1, y + h - 1], fill=colors[a["category_id"]], outline=(40, 40, 40))
        im.save(FIX / img["file_name"])


def main():
    FIX.mkdir(parents=True, exist_ok=True)
    write_compact(FIX / "accessdb_counts.json",
                  count_fixture(ACCESSDB, 2388, [(640, 480), (683, 512), (512, 683), (800, 600)], 2388, "accessdb"))
    write_compact(FIX / "accessreal_counts.json",
                  count_fixture(ACCESSREAL, 42, [(4032, 3024), (3024, 4032)], 42, "accessreal"))
    (DATA / "dictionary.json").write_text(json.dumps(make_dictionary(), indent=2) + "\n")
    (DATA / "ic_object_mapping.json").write_text(json.dumps(MAPPING, indent=2) + "\n")
    scene = scene_fixture()
    (FIX / "scene.json").write_text(json.dumps(scene, indent=2) + "\n")
    draw_images(scene)


if __name__ == "__main__":
    main()
