//! Reference per-class object counts, (id, name, AccessDB, AccessReal).

pub const CLASS_COUNTS: [(u32, &str, usize, usize); 22] = [
    (1, "button_panel_push_buttons", 83, 14),
    (2, "button_panel_turn_handle", 165, 8),
    (3, "electric_outlet", 1382, 33),
    (4, "faucet_faucet_only", 169, 3),
    (5, "faucet_handle_lever", 351, 13),
    (6, "faucet_pull_tiny_knob", 29, 0),
    (7, "faucet_rotate_cross", 86, 0),
    (8, "faucet_rotate_knob", 96, 0),
    (9, "handle_bar_large", 375, 19),
    (10, "handle_bar_small", 1712, 191),
    (11, "handle_cup_handle", 243, 31),
    (12, "handle_drop_pull", 491, 0),
    (13, "handle_flush_pull", 43, 0),
    (14, "handle_lever", 211, 10),
    (15, "handle_pull", 289, 14),
    (16, "knob_rotate_round", 205, 26),
    (17, "knob_static", 3026, 38),
    (18, "switch_rocker_multi", 84, 3),
    (19, "switch_rocker_single", 57, 4),
    (20, "switch_toggle_multi", 103, 8),
    (21, "switch_toggle_single", 115, 13),
    (22, "unidentifiable", 724, 0),
];

pub const ACCESSDB_TOTAL: usize = 10_039;
pub const ACCESSREAL_TOTAL: usize = 428;
pub const ACCESSDB_IMAGES: usize = 2388;
