// Decode the same bytes from offset 0 and from offset 2 and classify how
// each 4-byte instruction overlaps its upper halfword.

use rvgadget::isa::{decode, overlap_class};

fn main() {
    let samples: [&[u8]; 3] = [
        &[0x13, 0x4f, 0x83, 0x23, 0x0b, 0x00],
        &[0x13, 0x0a, 0x04, 0x40],
        &[0x37, 0x25, 0x93, 0x09, 0xb7, 0x16, 0x37, 0x23, 0x37, 0x26, 0x21, 0xa0],
    ];
    for bytes in samples {
        let hex: Vec<String> = bytes.iter().map(|b| format!("{b:02x}")).collect();
        println!("{}", hex.join(" "));
        for start in [0, 2] {
            let mut at = start;
            while at < bytes.len() {
                match decode(&bytes[at..], at as u64) {
                    Ok(i) => {
                        let class = overlap_class(&i).map(|c| format!("{c:?}")).unwrap_or_else(|_| "-".into());
                        println!("  +{at:<2} {:<24} overlap {class}", i.text());
                        at += i.width as usize;
                    }
                    Err(e) => {
                        println!("  +{at:<2} {e}");
                        break;
                    }
                }
            }
            println!();
        }
    }
}
