use kepla::chem::{parse_smiles, random_molecule};
use kepla::encoders::*;
use kepla::kernel::{gradcheck, ParamStore, Tape, Tensor};
use kepla::nn::Linear;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn file_provider(id: &str, m: Tensor) -> ProteinEmbeddingProvider {
    let mut e = EmbeddingStore::new(m.rows());
    e.insert(id, m).unwrap();
    ProteinEmbeddingProvider::FileBacked(e)
}

const INPUT: ProteinInput = ProteinInput { k_max: 1080, window: 9, pad_to: None };

#[test]
fn zero_embedding_gives_relu_bias() {
    let mut store = ParamStore::new();
    let enc = ProteinEncoder::new(&mut store, &[3, 2], &mut rng(0)).unwrap();
    let b = store.get(enc.layers[0].bias.unwrap()).clone();
    let provider = file_provider("p", Tensor::zeros(3, 18));
    let mut tape = Tape::new();
    let h = encode_protein(&mut tape, &store, &provider, &enc, "p", "", INPUT).unwrap();
    let v = tape.value(h.value);
    for c in 0..2 {
        for r in 0..2 {
            assert_eq!(v.get(r, c), b.get(r, 0).max(0.0));
        }
    }
}

#[test]
fn nine_residues_one_fragment() {
    let mut store = ParamStore::new();
    let provider = ProteinEmbeddingProvider::trainable(&mut store, 4, &mut rng(1));
    let enc = ProteinEncoder::new(&mut store, &[4, 4], &mut rng(2)).unwrap();
    let mut tape = Tape::new();
    let h = encode_protein(&mut tape, &store, &provider, &enc, "p", "ACDEFGHIK", INPUT).unwrap();
    assert_eq!(h.valid_count(), 1);
    assert_eq!(h.mask.len(), 1);
}

#[test]
fn two_layer_hand_check() {
    let mut store = ParamStore::new();
    let enc = ProteinEncoder::new(&mut store, &[2, 2, 2], &mut rng(3)).unwrap();
    let x = [0.3, -1.2];
    // one fragment of window 1 equals the residue column
    let provider = file_provider("p", Tensor::column(x.to_vec()));
    let mut tape = Tape::new();
    let input = ProteinInput { k_max: 10, window: 1, pad_to: None };
    let h = encode_protein(&mut tape, &store, &provider, &enc, "p", "", input).unwrap();
    let p = |name: &str| store.get(store.find(name).unwrap()).clone();
    let (w1, b1, w2, b2) = (p("protein.dnn.0.weight"), p("protein.dnn.0.bias"), p("protein.dnn.1.weight"), p("protein.dnn.1.bias"));
    let l1: Vec<f64> = (0..2).map(|i| (w1.get(i, 0) * x[0] + w1.get(i, 1) * x[1] + b1.get(i, 0)).max(0.0)).collect();
    for i in 0..2 {
        let want = (w2.get(i, 0) * l1[0] + w2.get(i, 1) * l1[1] + b2.get(i, 0)).max(0.0);
        assert!((tape.value(h.value).get(i, 0) - want).abs() < 1e-15);
    }
}

fn ligand_encoder(store: &mut ParamStore, widths: &[usize], seed: u64) -> LigandEncoder {
    LigandEncoder::new(store, widths, &mut rng(seed)).unwrap()
}

#[test]
fn single_atom_is_dense_stack() {
    let mut store = ParamStore::new();
    let enc = ligand_encoder(&mut store, &[3, 3, 3], 4);
    let g = parse_smiles("C").unwrap();
    let mut tape = Tape::new();
    let h = encode_ligand(&mut tape, &store, &enc, &g, 290, None).unwrap();
    let feats = kepla::chem::feature_tensor(&kepla::chem::featurize_atoms(&g), 1);
    let mut x = store.get(enc.projection.weight).matmul(&feats).unwrap();
    for l in &enc.layers {
        let mut y = store.get(l.weight).matmul(&x).unwrap();
        for r in 0..y.rows() {
            y.set(r, 0, (y.get(r, 0) + store.get(l.bias.unwrap()).get(r, 0)).max(0.0));
        }
        x = y;
    }
    for r in 0..3 {
        assert!((tape.value(h.value).get(r, 0) - x.get(r, 0)).abs() < 1e-14);
    }
}

#[test]
fn isolated_identical_atoms_share_output() {
    let mut store = ParamStore::new();
    let enc = ligand_encoder(&mut store, &[4, 4, 4, 4], 5);
    let g = parse_smiles("O.O").unwrap();
    let mut tape = Tape::new();
    let h = encode_ligand(&mut tape, &store, &enc, &g, 290, None).unwrap();
    let v = tape.value(h.value);
    assert_eq!(v.column_values(0), v.column_values(1));
}

#[test]
fn path_graph_normalization() {
    let g = parse_smiles("CCC").unwrap();
    let a = normalized_adjacency(&g, 3);
    let (e, m) = (1.0 / 2.0, 1.0 / 3.0);
    let s = 1.0 / 6f64.sqrt();
    let want = [[e, s, 0.0], [s, m, s], [0.0, s, e]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((a.get(i, j) - want[i][j]).abs() < 1e-15);
        }
    }
    // hand-set 2x2 layer on top of a 2-wide projection
    let mut store = ParamStore::new();
    let enc = ligand_encoder(&mut store, &[2, 2], 6);
    *store.get_mut(enc.layers[0].weight) = Tensor::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0]]).unwrap();
    *store.get_mut(enc.layers[0].bias.unwrap()) = Tensor::column(vec![0.1, -0.2]);
    let mut tape = Tape::new();
    let h = encode_ligand(&mut tape, &store, &enc, &g, 290, None).unwrap();
    let feats = kepla::chem::feature_tensor(&kepla::chem::featurize_atoms(&g), 3);
    let x = store.get(enc.projection.weight).matmul(&feats).unwrap();
    for j in 0..3 {
        for r in 0..2 {
            let w = [[1.0, -1.0], [0.5, 2.0]][r];
            let agg: f64 = (0..3).map(|i| want[i][j] * (w[0] * x.get(0, i) + w[1] * x.get(1, i))).sum();
            let y = (agg + [0.1, -0.2][r]).max(0.0);
            assert!((tape.value(h.value).get(r, j) - y).abs() < 1e-14);
        }
    }
}

#[test]
fn oversize_molecule_rejected() {
    let mut store = ParamStore::new();
    let enc = ligand_encoder(&mut store, &[2, 2], 7);
    let g = parse_smiles("CCCCC").unwrap();
    assert!(matches!(encode_ligand(&mut Tape::new(), &store, &enc, &g, 4, None), Err(EncoderError::Input(_))));
}

#[test]
fn global_projection_cases() {
    let mut store = ParamStore::new();
    let lin = Linear::new(&mut store, "g", 2, 2, true, &mut rng(8));
    *store.get_mut(lin.weight) = Tensor::identity(2);
    *store.get_mut(lin.bias.unwrap()) = Tensor::zeros(2, 1);
    let mut tape = Tape::new();
    let v = tape.constant(Tensor::from_rows(&[vec![1.5, 9.0], vec![-2.0, 9.0]]).unwrap());
    let rep = LocalRepresentation { value: v, mask: vec![true, false] };
    let h = global_project(&mut tape, &store, &lin, &rep).unwrap();
    assert_eq!(tape.value(h).data(), &[1.5, -2.0]);

    *store.get_mut(lin.bias.unwrap()) = Tensor::column(vec![0.5, 0.25]);
    let mut tape = Tape::new();
    let v = tape.constant(Tensor::from_rows(&[vec![1.5, -1.5], vec![-2.0, 2.0]]).unwrap());
    let rep = LocalRepresentation { value: v, mask: vec![true, true] };
    let h = global_project(&mut tape, &store, &lin, &rep).unwrap();
    assert_eq!(tape.value(h).data(), &[0.5, 0.25]);

    let mut r = rng(9);
    let w = Tensor::uniform(3, 3, 1.0, &mut r);
    let b = Tensor::uniform(3, 1, 1.0, &mut r);
    let x = Tensor::uniform(3, 3, 1.0, &mut r);
    *store.get_mut(lin.weight) = Tensor::zeros(2, 2);
    let mut s3 = ParamStore::new();
    let lin3 = Linear { weight: s3.add("w", w.clone()), bias: Some(s3.add("b", b.clone())) };
    let mut tape = Tape::new();
    let v = tape.constant(x.clone());
    let h = global_project(&mut tape, &s3, &lin3, &LocalRepresentation { value: v, mask: vec![true; 3] }).unwrap();
    for i in 0..3 {
        let mean: Vec<f64> = (0..3).map(|k| (0..3).map(|c| x.get(k, c)).sum::<f64>() / 3.0).collect();
        let want = (0..3).map(|k| w.get(i, k) * mean[k]).sum::<f64>() + b.get(i, 0);
        assert!((tape.value(h).get(i, 0) - want).abs() < 1e-14);
    }
    let mut tape = Tape::new();
    let v = tape.constant(x);
    assert!(global_project(&mut tape, &s3, &lin3, &LocalRepresentation { value: v, mask: vec![false; 3] }).is_err());
}

#[test]
fn encoder_gradients_match_finite_differences() {
    let mut store = ParamStore::new();
    let mut r = rng(10);
    let provider = ProteinEmbeddingProvider::trainable(&mut store, 3, &mut r);
    let penc = ProteinEncoder::new(&mut store, &[3, 4, 3], &mut r).unwrap();
    let lenc = ligand_encoder(&mut store, &[3, 3, 3], 11);
    let pg = global_projection(&mut store, "protein.global", 3, &mut r);
    let lg = global_projection(&mut store, "ligand.global", 3, &mut r);
    let g = parse_smiles("CC(=O)Nc1ccccc1").unwrap();
    let input = ProteinInput { k_max: 1080, window: 3, pad_to: None };
    let report = gradcheck::check(&store, 1e-5, |tape, store| {
        let hp = encode_protein(tape, store, &provider, &penc, "p", "MKVLAAGIVGHW", input)?;
        let hd = encode_ligand(tape, store, &lenc, &g, 290, None)?;
        let a = global_project(tape, store, &pg, &hp)?;
        let b = global_project(tape, store, &lg, &hd)?;
        let s1 = tape.sum_all(hp.value);
        let s2 = tape.sum_all(hd.value);
        let ab = tape.hadamard(a, b)?;
        let s3 = tape.sum_all(ab);
        let t = tape.add(s1, s2)?;
        Ok::<_, EncoderError>(tape.add(t, s3)?)
    })
    .unwrap();
    assert!(report.max_rel_err < 1e-4, "{report:?}");
}

#[test]
fn ligand_permutation_and_padding() {
    let mut store = ParamStore::new();
    let enc = ligand_encoder(&mut store, &[6, 6, 6, 6], 12);
    let lg = global_projection(&mut store, "ligand.global", 6, &mut rng(13));
    let mut r = rng(14);
    for _ in 0..25 {
        let n = r.gen_range(1..25);
        let g = random_molecule(&mut r, n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let p = g.relabeled(&order).unwrap();
        let mut tape = Tape::new();
        let hg = encode_ligand(&mut tape, &store, &enc, &g, 290, None).unwrap();
        let hp = encode_ligand(&mut tape, &store, &enc, &p, 290, None).unwrap();
        let padded = encode_ligand(&mut tape, &store, &enc, &g, 290, Some(n + 7)).unwrap();
        let (vg, vp, vpad) = (tape.value(hg.value).clone(), tape.value(hp.value).clone(), tape.value(padded.value).clone());
        for (new, &old) in order.iter().enumerate() {
            for (a, b) in vp.column_values(new).iter().zip(vg.column_values(old)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        for c in 0..n {
            assert_eq!(vpad.column_values(c), vg.column_values(c));
        }
        for c in n..n + 7 {
            assert!(vpad.column_values(c).iter().all(|&v| v == 0.0));
        }
        let a = global_project(&mut tape, &store, &lg, &hg).unwrap();
        let b = global_project(&mut tape, &store, &lg, &hp).unwrap();
        let c = global_project(&mut tape, &store, &lg, &padded).unwrap();
        for i in 0..6 {
            assert!((tape.value(a).get(i, 0) - tape.value(b).get(i, 0)).abs() < 1e-12);
            assert_eq!(tape.value(a).get(i, 0), tape.value(c).get(i, 0));
        }
    }
}

#[test]
fn protein_padding_is_neutral() {
    let mut store = ParamStore::new();
    let provider = ProteinEmbeddingProvider::trainable(&mut store, 5, &mut rng(15));
    let enc = ProteinEncoder::new(&mut store, &[5, 8, 5], &mut rng(16)).unwrap();
    let seq = "MSTNPKPQRKTKRNTNRRPQDVKFPGG";
    let mut tape = Tape::new();
    let a = encode_protein(&mut tape, &store, &provider, &enc, "p", seq, INPUT).unwrap();
    let padded = ProteinInput { pad_to: Some(1080), ..INPUT };
    let b = encode_protein(&mut tape, &store, &provider, &enc, "p", seq, padded).unwrap();
    assert_eq!(b.mask.len(), 120);
    assert_eq!(a.valid_count(), b.valid_count());
    let (va, vb) = (tape.value(a.value).clone(), tape.value(b.value).clone());
    for c in 0..a.mask.len() {
        assert_eq!(va.column_values(c), vb.column_values(c));
    }
    for c in a.mask.len()..120 {
        assert!(vb.column_values(c).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn encoding_is_deterministic() {
    let build = || {
        let mut store = ParamStore::new();
        let mut r = rng(17);
        let provider = ProteinEmbeddingProvider::trainable(&mut store, 4, &mut r);
        let enc = ProteinEncoder::new(&mut store, &[4, 4], &mut r).unwrap();
        let mut tape = Tape::new();
        let h = encode_protein(&mut tape, &store, &provider, &enc, "p", "MKWVTFISLL", INPUT).unwrap();
        tape.value(h.value).data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(build(), build());
}
