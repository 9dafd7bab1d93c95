def createNumber(str):
    if str is None:
        return None
    if str.startswith("0x") or str.startswith("0X") or str.startswith("-0x") or str.startswith("-0X"):
        hex_digits = str[3:] if str.startswith("-") else str[2:]
        value = int(hex_digits, 16)
        return -value if str.startswith("-") else value
    if isAllZeros(str):
        return 0
    return float(str)
