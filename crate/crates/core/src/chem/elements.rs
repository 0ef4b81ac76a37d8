//! Periodic table symbols and main-group valence rules.

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];

/// Chemical element, stored as its atomic number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (1..=118).contains(&z).then_some(Element(z))
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|s| *s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize - 1]
    }

    fn period(self) -> u8 {
        match self.0 {
            1..=2 => 1,
            3..=10 => 2,
            11..=18 => 3,
            19..=36 => 4,
            37..=54 => 5,
            55..=86 => 6,
            _ => 7,
        }
    }

    /// Valence electrons for the p-block elements that carry a valence table.
    fn valence_electrons(self) -> Option<i32> {
        match self.0 {
            1 => Some(1),
            5 | 13 => Some(3),
            6 | 14 | 32 => Some(4),
            7 | 15 | 33 | 51 => Some(5),
            8 | 16 | 34 | 52 => Some(6),
            9 | 17 | 35 | 53 => Some(7),
            _ => None,
        }
    }

    /// Allowed total valences for this element at a given formal charge,
    /// ascending, or `None` when no rule applies (metals, noble gases).
    ///
    /// The charge shifts the element to its isoelectronic neighbor: N+ behaves
    /// like C, O- like F, and so on. Elements from period 3 down may expand
    /// their octet in steps of two.
    pub fn allowed_valences(self, charge: i32) -> Option<Vec<u8>> {
        if self == Element::H {
            return match charge {
                0 => Some(vec![1]),
                _ => Some(vec![0]),
            };
        }
        let ve = self.valence_electrons()? - charge;
        let v = match ve {
            0 => vec![0],
            1..=4 => vec![ve as u8],
            5..=7 => {
                let base = (8 - ve) as u8;
                if self.period() >= 3 {
                    (0..)
                        .map(|k| base + 2 * k)
                        .take_while(|&v| v as i32 <= ve)
                        .collect()
                } else {
                    vec![base]
                }
            }
            8 => vec![0],
            _ => return None,
        };
        Some(v)
    }
}
