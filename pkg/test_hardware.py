"""
Test hardware inventory parsing and the hardware-support check.
"""
import pytest

from catalog import ModuleRecord
from errors import MalformedInventory
from hardware import (
    HardwareInventory,
    check_hardware_support,
    inventory_from_tool_output,
    parse_inventory,
)


def module(*tags):
    return ModuleRecord("m", 1, (), tuple(tags))


def test_single_device():
    inv = parse_inventory("HWINV v1\nIntel e1000 Gigabit\n")
    assert inv.devices == ("Intel e1000 Gigabit",)


def test_header_only_is_empty():
    inv = parse_inventory("HWINV v1\n")
    assert len(inv) == 0
    assert not check_hardware_support(module("e1000"), inv), "Gated modules must be skipped"
    assert check_hardware_support(module(), inv), "Ungated modules always pass"


def test_devices_are_trimmed_and_comments_skipped():
    inv = parse_inventory("HWINV v1\n  Intel e1000  \n# pci\n\tRealtek rtl8139\n   \nAMD Ryzen  \n")
    assert inv.devices == ("Intel e1000", "Realtek rtl8139", "AMD Ryzen")


def test_missing_header():
    with pytest.raises(MalformedInventory):
        parse_inventory("Intel e1000\n")
    with pytest.raises(MalformedInventory):
        parse_inventory("")


def test_empty_device_rejected():
    with pytest.raises(MalformedInventory):
        HardwareInventory(("Intel", "  "))


@pytest.mark.parametrize("tags, devices, expected", [
    (["e1000"], ["Intel e1000 Gigabit"], True),
    (["ath9k"], ["Intel e1000 Gigabit"], False),
    ([], [], True),
    (["E1000"], ["intel E1000 gigabit"], True),
    (["e1000"], ["Intel e1000e Gigabit"], False),        # whole words only
    (["e1000"], ["Intel(R) e1000-compatible NIC"], True),  # punctuation separates words
    (["gigabit ethernet"], ["Intel Gigabit Ethernet Controller"], True),
    (["ethernet gigabit"], ["Intel Gigabit Ethernet Controller"], False),
    (["ath9k", "e1000"], ["Intel e1000"], True),         # any tag may match
    (["---"], ["--- bogus ---"], False),                 # a tag without words never matches
])
def test_check_hardware_support(tags, devices, expected):
    assert check_hardware_support(module(*tags), HardwareInventory(tuple(devices))) is expected


def test_adding_devices_never_breaks_support():
    inv = HardwareInventory(("Intel e1000",))
    bigger = HardwareInventory(inv.devices + ("Realtek rtl8139", "Broadcom bge"))
    for tags in (["e1000"], ["bge"], ["ath9k"], []):
        if check_hardware_support(module(*tags), inv):
            assert check_hardware_support(module(*tags), bigger)


def test_device_order_and_case_do_not_matter():
    devices = ("Intel e1000", "Realtek rtl8139", "Broadcom bge")
    for tags in (["rtl8139"], ["BGE"], ["ath9k"], ["intel e1000"]):
        forward = check_hardware_support(module(*tags), HardwareInventory(devices))
        backward = check_hardware_support(module(*tags), HardwareInventory(devices[::-1]))
        upper = check_hardware_support(module(*[t.upper() for t in tags]),
                                       HardwareInventory(tuple(d.upper() for d in devices)))
        assert forward == backward == upper


def test_tool_output_ingestion_and_serialize():
    raw = ["", "  00:19.0  Intel   e1000e Ethernet ", "", "00:1f.3 Intel HDA Audio"]
    inv = inventory_from_tool_output(raw)
    assert inv.devices == ("00:19.0 Intel e1000e Ethernet", "00:1f.3 Intel HDA Audio")
    assert parse_inventory(inv.serialize()) == inv
