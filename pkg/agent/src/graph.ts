/**
 * Observation documents from the scheduler and their tensor-ready form.
 *
 * The wire format is documented field-by-field in ../docs/observation.md:
 * task nodes first (10 features), then resource nodes, then one pool node;
 * 11 edge types; flow/resource edges carry a 4-channel attribute vector.
 */

export interface ObsNodeDoc {
  kind: "task" | "resource" | "pool";
  features: number[];
}

export interface ObsEdgeDoc {
  type: string;
  src: number;
  dst: number;
  attr: number[];
}

export interface ObservationDoc {
  version: number;
  nodes: ObsNodeDoc[];
  edges: ObsEdgeDoc[];
  mask: boolean[];
}

export const EDGE_TYPES = [
  "precedence",
  "reverse-precedence",
  "flow",
  "reverse-flow",
  "task-resource",
  "resource-task",
  "task-pool",
  "resource-pool",
  "task-self-loop",
  "resource-self-loop",
  "pool-self-loop",
] as const;

export const N_EDGE_TYPES = EDGE_TYPES.length;
export const TASK_FEATURES = 10;
export const EDGE_ATTRS = 4;
// input vector per node: kind one-hot (task/resource/pool) + task features
export const NODE_INPUT_DIM = 3 + TASK_FEATURES;

const EDGE_TYPE_INDEX = new Map<string, number>(EDGE_TYPES.map((t, i) => [t, i]));
const KIND_INDEX = { task: 0, resource: 1, pool: 2 } as const;

/** One observation graph decoded into flat typed arrays. */
export interface Graph {
  nNodes: number;
  nTasks: number;
  nodeInput: Float64Array; // nNodes x NODE_INPUT_DIM
  src: Int32Array;
  dst: Int32Array;
  edgeType: Int32Array;
  edgeAttr: Float64Array; // nEdges x EDGE_ATTRS
  candidates: Int32Array; // task node ids with mask=true
  poolNode: number;
}

export function decodeObservation(doc: ObservationDoc): Graph {
  const nNodes = doc.nodes.length;
  const nodeInput = new Float64Array(nNodes * NODE_INPUT_DIM);
  let nTasks = 0;
  for (let i = 0; i < nNodes; i++) {
    const node = doc.nodes[i];
    nodeInput[i * NODE_INPUT_DIM + KIND_INDEX[node.kind]] = 1;
    if (node.kind === "task") {
      nTasks++;
      for (let j = 0; j < node.features.length; j++) {
        nodeInput[i * NODE_INPUT_DIM + 3 + j] = node.features[j];
      }
    }
  }
  const nEdges = doc.edges.length;
  const src = new Int32Array(nEdges);
  const dst = new Int32Array(nEdges);
  const edgeType = new Int32Array(nEdges);
  const edgeAttr = new Float64Array(nEdges * EDGE_ATTRS);
  for (let e = 0; e < nEdges; e++) {
    const edge = doc.edges[e];
    const t = EDGE_TYPE_INDEX.get(edge.type);
    if (t === undefined) throw new Error(`unknown edge type ${edge.type}`);
    src[e] = edge.src;
    dst[e] = edge.dst;
    edgeType[e] = t;
    for (let j = 0; j < edge.attr.length && j < EDGE_ATTRS; j++) edgeAttr[e * EDGE_ATTRS + j] = edge.attr[j];
  }
  const candidates = new Int32Array(doc.mask.map((ok, i) => (ok ? i : -1)).filter((i) => i >= 0));
  if (candidates.length === 0) throw new Error("observation has an empty action mask");
  return {
    nNodes,
    nTasks,
    nodeInput,
    src,
    dst,
    edgeType,
    edgeAttr,
    candidates,
    poolNode: nNodes - 1,
  };
}

/** Several graphs stacked block-diagonally for one batched forward pass. */
export interface GraphBatch {
  nNodes: number;
  nodeInput: Float64Array;
  src: Int32Array;
  dst: Int32Array;
  edgeType: Int32Array;
  edgeAttr: Float64Array;
  poolRows: Int32Array; // one per graph
  candidateRows: Int32Array; // all candidate task rows across graphs
  candidateGroup: Int32Array; // graph index per candidate row
}

export function batchGraphs(graphs: Graph[]): GraphBatch {
  let nNodes = 0;
  let nEdges = 0;
  let nCand = 0;
  for (const g of graphs) {
    nNodes += g.nNodes;
    nEdges += g.src.length;
    nCand += g.candidates.length;
  }
  const nodeInput = new Float64Array(nNodes * NODE_INPUT_DIM);
  const src = new Int32Array(nEdges);
  const dst = new Int32Array(nEdges);
  const edgeType = new Int32Array(nEdges);
  const edgeAttr = new Float64Array(nEdges * EDGE_ATTRS);
  const poolRows = new Int32Array(graphs.length);
  const candidateRows = new Int32Array(nCand);
  const candidateGroup = new Int32Array(nCand);

  let nodeOff = 0, edgeOff = 0, candOff = 0;
  graphs.forEach((g, gi) => {
    nodeInput.set(g.nodeInput, nodeOff * NODE_INPUT_DIM);
    for (let e = 0; e < g.src.length; e++) {
      src[edgeOff + e] = g.src[e] + nodeOff;
      dst[edgeOff + e] = g.dst[e] + nodeOff;
      edgeType[edgeOff + e] = g.edgeType[e];
    }
    edgeAttr.set(g.edgeAttr, edgeOff * EDGE_ATTRS);
    poolRows[gi] = g.poolNode + nodeOff;
    for (let c = 0; c < g.candidates.length; c++) {
      candidateRows[candOff + c] = g.candidates[c] + nodeOff;
      candidateGroup[candOff + c] = gi;
    }
    nodeOff += g.nNodes;
    edgeOff += g.src.length;
    candOff += g.candidates.length;
  });

  return { nNodes, nodeInput, src, dst, edgeType, edgeAttr, poolRows, candidateRows, candidateGroup };
}
