"""Shared template/document builders and gateway helpers for the suite."""

from __future__ import annotations

import copy
import json

import pytest

from ds2sc.gateway import Gateway
from ds2sc.spec_ir import parse_template


def fft_template_dict() -> dict:
    return {
        "domain": "digital",
        "global_config": {
            "zone_kind": "prefilled",
            "module_name": "fft_core",
            "transform_points": 8,
            "data_format": "complex_double",
            "compute_latency_ns": 100,
        },
        "interface_params": {
            "zone_kind": "extraction",
            "register_map": {
                "control_offset": "<FILL:control_offset>",
                "control_offset_hint": "byte offset of the control register",
                "status_offset": "<FILL:status_offset>",
                "data_in_offset": "<FILL:data_in_offset>",
                "data_out_offset": "<FILL:data_out_offset>",
            },
            "bus_width_bits": "<FILL:bus_width_bits>",
            "pins": ["<FILL:pin_list>"],
        },
        "behavioral_logic": {
            "zone_kind": "extraction",
            "reset_behavior": "<FILL:reset_behavior>",
            "transform_pseudocode": "<FILL:transform_pseudocode>",
        },
        "test_cases": {
            "zone_kind": "prefilled",
            "scenarios": [
                {
                    "name": "fft_ifft_roundtrip",
                    "domain": "digital",
                    "stimulus": {
                        "kind": "transform_roundtrip",
                        "input_real": [1, 2, 3, 4, 5, 6, 7, 8],
                    },
                    "expected": [
                        {
                            "check": "roundtrip_max_error",
                            "value": 0.0,
                            "tolerance": 1e-9,
                            "units": "abs",
                        }
                    ],
                }
            ],
        },
    }


def la_template_dict() -> dict:
    return {
        "domain": "analog",
        "global_config": {
            "zone_kind": "prefilled",
            "module_name": "limiting_amp",
            "supply_v": 3.3,
        },
        "interface_params": {
            "zone_kind": "extraction",
            "gain": "<FILL:gain>",
            "gain_hint": "small-signal voltage gain, V/V",
            "v_out_max_v": "<FILL:v_out_max>",
            "v_out_min_v": "<FILL:v_out_min>",
            "quiescent_v": "<FILL:quiescent>",
            "pins": ["<FILL:pin_list>"],
        },
        "behavioral_logic": {
            "zone_kind": "extraction",
            "enable_logic": "<FILL:enable_logic>",
            "transfer_function": "<FILL:transfer_function>",
        },
        "test_cases": {
            "zone_kind": "prefilled",
            "scenarios": [
                {
                    "name": "la_three_phase",
                    "domain": "analog",
                    "stimulus": {
                        "kind": "windowed_sine",
                        "params": {
                            "gain": 10.0,
                            "v_out_max_v": 0.4,
                            "v_out_min_v": -0.4,
                            "quiescent_v": 0.0,
                        },
                        "segments": [
                            {
                                "name": "linear",
                                "t_start_ns": 0,
                                "t_end_ns": 1000,
                                "amplitude_v": 0.01,
                                "frequency_hz": 1.0e7,
                                "enable": True,
                            },
                            {
                                "name": "clamped",
                                "t_start_ns": 1000,
                                "t_end_ns": 2000,
                                "amplitude_v": 0.2,
                                "frequency_hz": 1.0e7,
                                "enable": True,
                            },
                            {
                                "name": "disabled",
                                "t_start_ns": 2000,
                                "t_end_ns": 3000,
                                "amplitude_v": 0.2,
                                "frequency_hz": 1.0e7,
                                "enable": False,
                            },
                        ],
                    },
                    "expected": [
                        {
                            "check": "window_amplitude",
                            "window": "linear",
                            "value": 0.1,
                            "tolerance": 0.001,
                            "units": "V",
                        },
                        {
                            "check": "window_clamp",
                            "window": "clamped",
                            "value": 0.4,
                            "tolerance": 1e-6,
                            "units": "V",
                        },
                        {
                            "check": "window_quiescent",
                            "window": "disabled",
                            "value": 0.0,
                            "tolerance": 1e-9,
                            "units": "V",
                        },
                    ],
                }
            ],
        },
    }


def pa_template_dict(reference_points: list | None = None) -> dict:
    return {
        "domain": "rf",
        "global_config": {
            "zone_kind": "prefilled",
            "module_name": "power_amp",
            "frequency_band_ghz": [13.0, 15.5],
        },
        "interface_params": {
            "zone_kind": "extraction",
            "g_db": "<FILL:g_db>",
            "g_db_hint": "small-signal gain in dB",
            "psat_dbm": "<FILL:psat_dbm>",
            "curve_points": ["<FILL:curve_points>"],
        },
        "behavioral_logic": {
            "zone_kind": "extraction",
            "compression_model": "<FILL:compression_model>",
        },
        "test_cases": {
            "zone_kind": "prefilled",
            "scenarios": [
                {
                    "name": "pa_power_sweep",
                    "domain": "rf",
                    "stimulus": {
                        "kind": "power_sweep",
                        "params": {"g_db": 20.0, "psat_dbm": 43.0, "s": 2.0},
                        "start_dbm": -30.0,
                        "stop_dbm": 35.0,
                        "step_db": 0.5,
                    },
                    "expected": [
                        {
                            "check": "curve_max_error",
                            "value": 0.0,
                            "tolerance": 1.0,
                            "units": "dB",
                            "reference_points": reference_points or [],
                        }
                    ],
                }
            ],
        },
    }


FFT_FILLS = {
    "control_offset": "0x00",
    "status_offset": "0x04",
    "data_in_offset": "0x08",
    "data_out_offset": "0x0C",
    "bus_width_bits": 32,
    "reset_behavior": "clear status and buffers on reset assert",
    "transform_pseudocode": "load 8 samples; run transform; set done bit; serve results",
}


def fill_template_dict(
    tree: dict,
    fills: dict,
    pin_list: list | None = None,
    default: str | None = "null",
) -> dict:
    """Deep copy with anchors replaced by their fill values.

    Scalar anchors missing from ``fills`` get ``default`` ("null" marks the
    feature absent); pass default=None to leave them unfilled.
    """
    import re

    anchor_re = re.compile(r"^<FILL:([A-Za-z0-9_.\-]+)>$")

    def walk(node):
        if isinstance(node, dict):
            return {k: walk(v) for k, v in node.items()}
        if isinstance(node, list):
            if len(node) == 1 and isinstance(node[0], str) and anchor_re.match(node[0]):
                name = anchor_re.match(node[0]).group(1)
                if name in fills:
                    return copy.deepcopy(fills[name])
                if default is None:
                    return [node[0]]
                return copy.deepcopy(pin_list if pin_list is not None else ["P1", "P2"])
            return [walk(v) for v in node]
        if isinstance(node, str):
            m = anchor_re.match(node)
            if m:
                if m.group(1) in fills:
                    return copy.deepcopy(fills[m.group(1)])
                return node if default is None else default
        return node

    return walk(tree)


@pytest.fixture
def fft_template():
    return parse_template(json.dumps(fft_template_dict()))


@pytest.fixture
def fft_filled_text():
    return json.dumps(fill_template_dict(fft_template_dict(), FFT_FILLS), indent=2)


@pytest.fixture
def la_template():
    return parse_template(json.dumps(la_template_dict()))


@pytest.fixture
def pa_template():
    return parse_template(json.dumps(pa_template_dict()))


def scripted_gateway(*responses: str) -> Gateway:
    return Gateway.scripted(list(responses))
