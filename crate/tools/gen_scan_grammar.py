#!/usr/bin/env python3
"""Regenerates crates/core/grammars/scan_actions.gr.

The grammar covers every navigation-command action sequence: five command
families (walk/look/run/jump/turn), each with direction and opposite/around
modifiers, repetition up to three times, and optional pairing of two simple
commands. Repetition is expressed per pattern so that only the same pattern
repeats, which keeps the string language exactly right.
"""

import os

ACTIONS = [("Walk", "i_walk"), ("Look", "i_look"), ("Run", "i_run"), ("Jump", "i_jump")]
TL, TR = "Turn_left", "Turn_right"


def main() -> None:
    rules: list[str] = []
    rules.append("%start S")
    rules.append("S -> Command")
    for name, _ in ACTIONS:
        rules.append(f"Command -> {name}_command")
    rules.append("Command -> Turn_command")
    rules.append("Command -> Simple_command Simple_command")
    for name, _ in ACTIONS:
        rules.append(f"Simple_command -> {name}_command")
    rules.append("Simple_command -> Turn_command")

    for name, token in ACTIONS:
        # One phrase pattern per modifier; repetition stays within a pattern.
        patterns = [
            name,
            f"L{name}",
            f"R{name}",
            f"OL{name}",
            f"OR{name}",
            f"AL{name}",
            f"AR{name}",
        ]
        rules.append(f"{name}_command -> {name}_actions")
        for p in patterns:
            for reps in (1, 2, 3):
                rules.append(f"{name}_actions -> {' '.join([p] * reps)}")
        rules.append(f"L{name} -> {TL} {name}")
        rules.append(f"R{name} -> {TR} {name}")
        rules.append(f"OL{name} -> {TL} {TL} {name}")
        rules.append(f"OR{name} -> {TR} {TR} {name}")
        rules.append(f"AL{name} -> {' '.join([TL, name] * 4)}")
        rules.append(f"AR{name} -> {' '.join([TR, name] * 4)}")
        rules.append(f"{name} -> '{token}'")

    turn_patterns = [TL, TR, "Opp_left", "Opp_right", "Around_left", "Around_right"]
    rules.append("Turn_command -> Turn_actions")
    for p in turn_patterns:
        for reps in (1, 2, 3):
            rules.append(f"Turn_actions -> {' '.join([p] * reps)}")
    rules.append(f"Opp_left -> {TL} {TL}")
    rules.append(f"Opp_right -> {TR} {TR}")
    rules.append(f"Around_left -> {' '.join([TL] * 4)}")
    rules.append(f"Around_right -> {' '.join([TR] * 4)}")
    rules.append(f"{TL} -> 'i_turn_left'")
    rules.append(f"{TR} -> 'i_turn_right'")

    header = (
        "# Action sequences of compositional navigation commands: five command\n"
        "# families with direction/opposite/around modifiers, repetition up to\n"
        "# three, and optional pairing of two simple commands.\n"
        "# Generated by tools/gen_scan_grammar.py; edit there, not here.\n"
    )
    out = os.path.join(
        os.path.dirname(__file__), "..", "crates", "core", "grammars", "scan_actions.gr"
    )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write("\n".join(rules))
        fh.write("\n")
    print(f"wrote {os.path.normpath(out)} with {len(rules) - 1} rules")


if __name__ == "__main__":
    main()
