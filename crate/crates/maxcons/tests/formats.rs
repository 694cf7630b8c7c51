use maxcons::io::{
    format_instance, parse_instance, parse_topology, write_edge_csv, write_trace_csv,
};
use maxcons_core::engine::{run, InitSpec};
use maxcons_core::graph::{augment, Graph};
use maxcons_core::problem::assemble;

fn sample_trace() -> maxcons_core::engine::Trace {
    let p = assemble(augment(&Graph::path(3)), vec![0.4, -0.3, 1.1], 1.0, 0.5).unwrap();
    run(&p, &InitSpec::new(1000.0, 1.0, 5), 4).unwrap()
}

#[test]
fn trace_csv_has_one_row_per_round_and_node() {
    let trace = sample_trace();
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,node,x,z_to_dummy,z_from_dummy,y_sum,branch");
    assert_eq!(lines.len(), 1 + 5 * 3);
    let row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row[..2], ["0", "2"]);
    assert_eq!(row[2].parse::<f64>().unwrap(), trace.x(1)[1]);
    assert_eq!(row[3].parse::<f64>().unwrap(), trace.init().to_dummy[1]);
    assert!(row[6] == "reflect" || row[6] == "exchange");
}

#[test]
fn edge_csv_covers_terminal_state() {
    let trace = sample_trace();
    let mut buf = Vec::new();
    write_edge_csv(&trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 * 4);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[..3], ["5", "3", "2"]);
    assert_eq!(
        last[3].parse::<f64>().unwrap(),
        *trace.z(5).regular.last().unwrap()
    );
}

#[test]
fn replayed_instance_gives_identical_trace() {
    let trace = sample_trace();
    let p = parse_instance(&format_instance(trace.instance())).unwrap();
    assert_eq!(run(&p, &InitSpec::new(1000.0, 1.0, 5), 4).unwrap(), trace);
}

#[test]
fn topology_file_with_comments() {
    let text = "# triangle\nn=3\n1 2\n2 3\n3 1\n";
    let g = parse_topology(text).unwrap();
    assert_eq!(g.edge_count(), 3);
    assert!(g.has_edge(0, 2));
}
