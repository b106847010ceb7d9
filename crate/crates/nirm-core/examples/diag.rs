use nirm_core::graph::NodeMask;
use nirm_core::io;
use nirm_core::model::{forward, ModelConfig};
use nirm_core::train::{gradients, init_parameters};

fn norm(v: &[f64]) -> f64 { v.iter().map(|x| x * x).sum::<f64>().sqrt() }

fn main() {
    let dataset = io::load_dataset(std::path::Path::new("/tmp/ds_train")).unwrap();
    let params = init_parameters(&ModelConfig::default(), nirm_core::generate::mix_seed(1, 0x1217));
    let sample = &dataset[0];
    let n = sample.graph.node_count();
    let mask = NodeMask::all_alive(n);
    let state = forward(&sample.graph, &mask, &params);
    println!("s_init   : {:?}", &state.s_init[..6.min(n)]);
    println!("|emb|    : {}", norm(&state.embeddings));
    println!("s_local  : {:?}", &state.s_local[..6.min(n)]);
    println!("s_global : {:?}", &state.s_global[..6.min(n)]);
    let (loss, grads) = gradients(sample, &params, 0.0, None);
    println!("loss {loss}; |grad| {}", norm(&grads));
    let layout = params.layout();
    for t in layout.tensors() {
        let g = &grads[t.offset..t.offset + t.len];
        println!("  {:10} |g| = {:.3e}", t.name, norm(g));
    }
}
