from flask import Blueprint, request, jsonify, current_app
from dataclasses import replace
from src.common.common import Scheme, RunStatus, Quantity
from src.common.errors import ConfigError, GridError
from src.models.models import db, ExperimentRecord, ScalingRecord, PublishedReference
from src.numerics.cfvm import SimConfig
from src.report.report import ExperimentRow, run_one, store_rows, compare_with_published


results_bp = Blueprint('results', __name__)

def record_to_row(record):
    """数据库记录转换为 ExperimentRow，供比较函数使用"""
    return ExperimentRow(
        N=record.n, t=record.t, eps=record.eps, scheme=record.scheme,
        vel_l2=record.vel_l2, p_l2=record.p_l2, dt=record.dt,
        theta=record.theta, alpha=record.alpha, status=record.status,
        wall_clock_s=record.wall_clock_s, p_l2_raw=record.p_l2_raw,
        vel_rel=record.vel_rel, p_rel=record.p_rel
    )

@results_bp.route('/results', methods=['GET'])
def list_results():
    """查询已保存的实验结果

    查询参数（均可选）:
    - scheme: cfvm / nfvm
    - eps: 粘性系数
    - n: 网格数 N=M=L
    - status: ok / blowup
    - page, per_page: 分页，per_page 最大 100
    """
    query = ExperimentRecord.query

    scheme = request.args.get('scheme')
    if scheme:
        if scheme not in Scheme.ALL:
            return jsonify({"message": f"scheme 只能是 {', '.join(Scheme.ALL)}"}), 400
        query = query.filter_by(scheme=scheme)

    status = request.args.get('status')
    if status:
        query = query.filter_by(status=status)

    try:
        eps = float(request.args['eps']) if 'eps' in request.args else None
        n = int(request.args['n']) if 'n' in request.args else None
        page = int(request.args.get('page', 1))
        per_page = min(int(request.args.get('per_page', 20)), 100)
    except ValueError:
        return jsonify({"message": "eps 必须是数值，n、page、per_page 必须是整数"}), 400
    if eps is not None:
        query = query.filter(ExperimentRecord.eps == eps)
    if n is not None:
        query = query.filter_by(n=n)
    if page < 1 or per_page < 1:
        return jsonify({"message": "page 和 per_page 必须为正整数"}), 400

    pagination = query.order_by(ExperimentRecord.id).paginate(page=page, per_page=per_page, error_out=False)
    return jsonify({
        "total": pagination.total,
        "page": page,
        "per_page": per_page,
        "results": [record.to_dict() for record in pagination.items]
    }), 200

@results_bp.route('/results/compare', methods=['GET'])
def compare_results():
    """已保存结果与已发表误差表逐格比较

    查询参数: quantity = velocity（默认）或 pressure
    """
    quantity = request.args.get('quantity', 'velocity')
    if quantity not in ('velocity', 'pressure'):
        return jsonify({"message": "quantity 只能是 velocity 或 pressure"}), 400

    records = ExperimentRecord.query.order_by(ExperimentRecord.id).all()
    comparison = compare_with_published([record_to_row(r) for r in records], quantity)
    summary = {}
    for entry in comparison:
        summary[entry['verdict']] = summary.get(entry['verdict'], 0) + 1

    return jsonify({
        "quantity": quantity,
        "summary": summary,
        "comparison": comparison
    }), 200

@results_bp.route('/references', methods=['GET'])
def list_references():
    """已发表误差表（需先运行 init_reference_data 脚本）"""
    query = PublishedReference.query
    quantity = request.args.get('quantity')
    if quantity:
        query = query.filter_by(quantity=quantity)
    references = query.order_by(PublishedReference.quantity, PublishedReference.eps.desc(), PublishedReference.n).all()
    return jsonify({"references": [r.to_dict() for r in references]}), 200

@results_bp.route('/runs', methods=['POST'])
def create_run():
    """运行一次人工解算例并保存结果

    请求体格式:
    {
        "n": 10,             # 必填，N=M=L
        "eps": 0.01,         # 必填
        "scheme": "nfvm",    # 可选，默认 nfvm
        "dt": 0.01,          # 可选
        "t_end": 1.0,        # 可选
        "theta": 1.0,        # 可选
        "alpha": 1.0         # 可选
    }
    """
    data = request.get_json(silent=True)
    if not data:
        return jsonify({"message": "请求体必须是 JSON"}), 400

    if 'n' not in data or 'eps' not in data:
        return jsonify({"message": "n 和 eps 不能为空"}), 400

    n = data.get('n')
    if not isinstance(n, int) or isinstance(n, bool):
        return jsonify({"message": "n 必须是整数"}), 400
    max_n = current_app.config.get('RUNS_MAX_N', 40)
    if n > max_n:
        return jsonify({"message": f"n 不能超过 {max_n}"}), 400

    overrides = {}
    for name in ('eps', 'dt', 't_end', 'theta', 'alpha'):
        if name in data:
            value = data[name]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                return jsonify({"message": f"{name} 必须是数值"}), 400
            overrides[name] = float(value)
    overrides['scheme'] = data.get('scheme', Scheme.NFVM)

    try:
        cfg = replace(SimConfig(), **overrides)
        row = run_one(n, cfg.eps, cfg.scheme, cfg)
    except (ConfigError, GridError) as e:
        return jsonify({"message": f"参数错误：{str(e)}"}), 400

    try:
        record = store_rows([row])[0]
    except Exception as e:
        db.session.rollback()
        return jsonify({"message": f"保存失败：{str(e)}"}), 500

    message = "运行完成" if row.status == RunStatus.OK else "运行发散（blowup）"
    return jsonify({"message": message, "result": record.to_dict()}), 201

@results_bp.route('/scaling', methods=['GET'])
def list_scaling():
    """已保存的校正子幂律研究，可按 quantity 过滤"""
    query = ScalingRecord.query
    quantity = request.args.get('quantity')
    if quantity:
        if quantity not in Quantity.ALL:
            return jsonify({"message": f"quantity 只能是 {', '.join(Quantity.ALL)}"}), 400
        query = query.filter_by(quantity=quantity)
    studies = query.order_by(ScalingRecord.id).all()
    return jsonify({"studies": [s.to_dict() for s in studies]}), 200
