"""Regenerates src/glyphs.inc: an 8x8 monochrome table for printable ASCII.

Rasterizes DejaVu Sans Mono with Pillow and thresholds it. The output is
checked in; the engine never touches system fonts at run time.
"""
import sys
from PIL import Image, ImageDraw, ImageFont

FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
SIZE = 9
THRESHOLD = 110


def glyph_rows(font, ch):
    img = Image.new("L", (32, 32), 0)
    ImageDraw.Draw(img).text((4, 0), ch, fill=255, font=font)
    # Common baseline: crop a fixed 8-row band and center horizontally on the ink.
    ascent, _ = font.getmetrics()
    top = max(0, ascent - 7)
    box = img.getbbox()
    left = 4
    if box:
        ink_w = box[2] - box[0]
        left = box[0] - max(0, (8 - ink_w) // 2)
    rows = []
    for y in range(top, top + 8):
        bits = 0
        for x in range(8):
            if img.getpixel((left + x, y)) >= THRESHOLD:
                bits |= 0x80 >> x
        rows.append(bits)
    return rows


def main(out_path):
    font = ImageFont.truetype(FONT, SIZE)
    with open(out_path, "w") as f:
        f.write("// Generated by tools/gen_glyphs.py; 8 rows per glyph, MSB is the leftmost pixel.\n")
        for code in range(32, 127):
            rows = glyph_rows(font, chr(code))
            hexrows = ", ".join(f"0x{r:02x}" for r in rows)
            label = chr(code) if chr(code) not in "\\" else "backslash"
            f.write(f"{{{hexrows}}},  // {code} {label!s}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/glyphs.inc")
